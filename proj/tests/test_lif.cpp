#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcast/lif.hpp"

using namespace qcast;
using namespace qcast::testing;

TEST_CASE("lif_step") {
    CHECK(std::exp(-1.0) == doctest::Approx(0.367879).epsilon(1e-6));
    // fixed point
    CHECK(lif_step(0.4, 0.4, 3.0) == doctest::Approx(0.4).epsilon(1e-15));
    // zero input decays geometrically
    const double tau = 2.5;
    const double beta = std::exp(-1.0 / tau);
    double u = 0.9;
    for (int t = 1; t <= 100; ++t) {
        u = lif_step(u, 0.0, tau);
        CHECK(u == doctest::Approx(std::pow(beta, t) * 0.9).epsilon(1e-13));
    }
    // beta in (0,1) for admissible tau
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const double b = std::exp(-1.0 / std::max(rng.uniform(0.0, 30.0), kTauMin));
        CHECK(b > 0.0);
        CHECK(b < 1.0);
    }
}

TEST_CASE("layer forward basics") {
    LifHyper hyper;

    SUBCASE("zero kernel and bias give no spikes") {
        LifLayerParams p;
        p.kernel = Tensor({3, 4});
        p.bias = Tensor({4});
        p.tau_raw = Tensor({4});
        p.tau_raw.fill(5.0);
        Tensor x({2, 6, 3});
        LifCache cache;
        Tensor out = lif_layer_forward(x, p, hyper, cache);
        for (double v : out.data) CHECK(v == 0.0);
    }

    SUBCASE("constant unit drive converges toward 1 and first-spike time matches the recursion") {
        LifLayerParams p;
        p.kernel = Tensor({1, 1});
        p.bias = Tensor({1});
        p.bias[0] = 1.0;  // i = 1 regardless of input
        p.tau_raw = Tensor({1});
        p.tau_raw[0] = 20.0;
        Tensor x({1, 30, 1});
        LifCache cache;
        Tensor out = lif_layer_forward(x, p, hyper, cache);

        // sequential recursion oracle
        const double beta = std::exp(-1.0 / 20.0);
        double u = 0.0;
        int first_spike = -1;
        for (int t = 0; t < 30; ++t) {
            u = beta * u + (1 - beta) * 1.0;
            if (u >= hyper.threshold) {
                first_spike = t;
                break;
            }
        }
        REQUIRE(first_spike >= 0);
        for (int t = 0; t < 30; ++t)
            CHECK(out.at3(0, std::size_t(t), 0) == (t == first_spike ? 1.0 : 0.0) * 1.0);
        // after the spike the membrane restarts from zero; with the same
        // constant drive the pattern repeats -- check reset directly
        CHECK(cache.u_prev.at3(0, std::size_t(first_spike) + 1, 0) == 0.0);
    }

    SUBCASE("shape mismatch rejected") {
        LifLayerParams p;
        p.kernel = Tensor({3, 4});
        p.bias = Tensor({4});
        p.tau_raw = Tensor({4});
        Tensor x({2, 6, 7});
        LifCache cache;
        CHECK_THROWS_AS(lif_layer_forward(x, p, hyper, cache), std::invalid_argument);
    }
}

TEST_CASE("batched forward equals sequential oracle") {
    Rng rng(9);
    LifHyper hyper;
    for (int trial = 0; trial < 10; ++trial) {
        LifLayerParams p = lif_init(3, 5, rng);
        for (auto& b : p.bias.data) b = rng.uniform(-0.5, 0.5);
        Tensor x({2, 5, 3});
        fill_uniform(x, rng, -2.0, 2.0);
        LifCache cache;
        Tensor batched = lif_layer_forward(x, p, hyper, cache);
        Tensor seq = lif_sequential(x, p, hyper);
        CHECK(max_abs_diff(batched, seq) <= 1e-12);
    }
}

namespace {

double relaxed_loss(const Tensor& x, LifLayerParams& p, const LifHyper& h,
                    const Tensor& w) {
    LifCache cache;
    Tensor out = lif_layer_forward(x, p, h, cache, /*relaxed=*/true);
    double s = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) s += w[i] * out[i];
    return s;
}

}  // namespace

TEST_CASE("backward matches finite differences of the relaxed forward") {
    Rng rng(17);
    LifHyper hyper;
    for (int trial = 0; trial < 5; ++trial) {
        LifLayerParams p = lif_init(2, 3, rng);
        for (auto& b : p.bias.data) b = rng.uniform(-0.5, 0.5);
        Tensor x({2, 3, 2});
        fill_uniform(x, rng, -2.0, 2.0);
        Tensor w({2, 3, 3});
        fill_uniform(w, rng);

        LifCache cache;
        lif_layer_forward(x, p, hyper, cache, true);
        LifGrads grads;
        Tensor grad_in = lif_layer_backward(cache, p, w, grads);

        auto loss = [&] { return relaxed_loss(x, p, hyper, w); };
        CHECK(max_rel_err(grads.kernel, finite_difference(p.kernel, loss)) < 1e-4);
        CHECK(max_rel_err(grads.bias, finite_difference(p.bias, loss)) < 1e-4);
        CHECK(max_rel_err(grads.tau_raw, finite_difference(p.tau_raw, loss)) < 1e-4);
        Tensor xcopy = x;
        auto loss_x = [&] { return relaxed_loss(xcopy, p, hyper, w); };
        CHECK(max_rel_err(grad_in, finite_difference(xcopy, loss_x)) < 1e-4);
    }
}

TEST_CASE("tau gradient sign under sustained sub-threshold drive") {
    // positive constant drive below threshold: larger tau weakens the
    // (1-beta) input coupling, so the relaxed output decreases with tau
    LifHyper hyper;
    LifLayerParams p;
    p.kernel = Tensor({1, 1});
    p.kernel[0] = 0.5;  // drive 0.5 < threshold
    p.bias = Tensor({1});
    p.tau_raw = Tensor({1});
    p.tau_raw[0] = 4.0;
    Tensor x({1, 6, 1});
    x.fill(1.0);
    Tensor w({1, 6, 1});
    w.fill(1.0);

    LifCache cache;
    lif_layer_forward(x, p, hyper, cache, true);
    LifGrads grads;
    lif_layer_backward(cache, p, w, grads);
    CHECK(grads.tau_raw[0] < 0.0);
    auto loss = [&] { return relaxed_loss(x, p, hyper, w); };
    const Tensor fd = finite_difference(p.tau_raw, loss);
    CHECK(fd[0] < 0.0);
    CHECK(max_rel_err(grads.tau_raw, fd) < 1e-4);
}

TEST_CASE("zero grad_out gives zero gradients and cache is single-use") {
    Rng rng(23);
    LifHyper hyper;
    LifLayerParams p = lif_init(3, 4, rng);
    Tensor x({2, 4, 3});
    fill_uniform(x, rng);
    LifCache cache;
    lif_layer_forward(x, p, hyper, cache);
    Tensor zero({2, 4, 4});
    LifGrads grads;
    Tensor gin = lif_layer_backward(cache, p, zero, grads);
    for (double v : gin.data) CHECK(v == 0.0);
    for (double v : grads.kernel.data) CHECK(v == 0.0);
    CHECK_THROWS_AS(lif_layer_backward(cache, p, zero, grads), std::logic_error);
}

TEST_CASE("parameter count matches the quantum layer at 48/48") {
    Rng rng(29);
    LifLayerParams p = lif_init(48, 48, rng);
    CHECK(p.count() == 2400);
}
