#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "oracles.hpp"
#include "qcast/model.hpp"

using namespace qcast;
using namespace qcast::testing;

namespace {

ModelSpec weather_spec(NeuronKind kind) {
    ModelSpec s;
    s.kind = kind;
    s.n_features = 4;
    s.n_targets = 4;
    s.lstm_units = 24;
    s.window = 12;
    return s;
}

// Tiny learnable dataset: next value of a clean sinusoid from its last
// `window` samples, two input features (signal and its lag).
WindowedDataset toy_dataset(std::size_t n_rows) {
    DatasetSchema schema;
    schema.features = {"s", "lag"};
    schema.targets = {"s"};
    schema.window = 8;
    schema.train_frac = 0.8;

    RawSeries r;
    r.column_names = {"s", "lag"};
    r.columns.resize(2);
    for (std::size_t i = 0; i < n_rows; ++i) {
        r.columns[0].push_back(std::sin(double(i) * 0.35));
        r.columns[1].push_back(std::sin(double(i) * 0.35 - 0.35));
    }
    r.timestamps.assign(n_rows, "");
    const ScalerStats stats = standardize(r, n_rows * 4 / 5);
    return make_windows(r, stats, schema);
}

}  // namespace

TEST_CASE("parameter counts") {
    SUBCASE("4 features, 4 targets, 24 LSTM units: 11140 for both kinds") {
        Model q(weather_spec(NeuronKind::qlif), 1);
        Model c(weather_spec(NeuronKind::lif), 1);
        CHECK(q.param_count() == 11140);
        CHECK(c.param_count() == 11140);

        const std::vector<std::size_t> expect{240, 2400, 96, 7008, 800, 528, 68};
        CHECK(q.layer_param_counts() == expect);
        CHECK(c.layer_param_counts() == expect);
    }

    SUBCASE("3 features, 1 target, 48 LSTM units") {
        ModelSpec s = weather_spec(NeuronKind::qlif);
        s.n_features = 3;
        s.n_targets = 1;
        s.lstm_units = 48;
        Model m(s, 1);
        const auto counts = m.layer_param_counts();
        CHECK(counts[0] == 192);    // 3*48 + 48
        CHECK(counts[3] == 18624);  // 4*(48*96 + 48)
        CHECK(counts[6] == 17);     // 16*1 + 1
    }
}

TEST_CASE("structure differs only at the spiking layer") {
    Model q(weather_spec(NeuronKind::qlif), 7);
    Model c(weather_spec(NeuronKind::lif), 7);
    const auto sq = q.structure();
    const auto sc = c.structure();
    REQUIRE(sq.size() == 7);
    REQUIRE(sc.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        if (i == 1)
            CHECK(sq[i] != sc[i]);
        else
            CHECK(sq[i] == sc[i]);
    }
}

TEST_CASE("non-spiking weights are identical across neuron kinds") {
    Model q(weather_spec(NeuronKind::qlif), 11);
    Model c(weather_spec(NeuronKind::lif), 11);
    auto qs = q.state_tensors();
    auto cs = c.state_tensors();
    REQUIRE(qs.size() == cs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (qs[i].first.rfind("l2.", 0) == 0) continue;  // spiking layer
        CHECK(qs[i].first == cs[i].first);
        CHECK(max_abs_diff(*qs[i].second, *cs[i].second) == 0.0);
    }
}

TEST_CASE("inference is deterministic and batch-size independent") {
    for (NeuronKind kind : {NeuronKind::qlif, NeuronKind::lif}) {
        Model m(weather_spec(kind), 3);
        Rng rng(5);
        Tensor x({300, 12, 4});  // crosses the internal prediction batch size
        fill_uniform(x, rng);
        Tensor a = m.predict(x);
        Tensor b = m.predict(x);
        CHECK(max_abs_diff(a, b) == 0.0);

        // a leading slice predicts the same values as the full batch
        Tensor head({7, 12, 4},
                    std::vector<double>(x.data.begin(),
                                        x.data.begin() + 7 * 12 * 4));
        Tensor ph = m.predict(head);
        for (std::size_t i = 0; i < ph.numel(); ++i)
            CHECK(ph[i] == doctest::Approx(a[i]).epsilon(1e-12));
    }
}

TEST_CASE("gradients downstream of the spiking layer match finite differences") {
    // Layers 1-2 use a surrogate gradient through the hard spike, so they
    // are excluded here; their backward passes are checked against the
    // relaxed forward in the dedicated neuron test binaries. Everything
    // after the spike sees a smooth loss and must agree with central
    // differences.
    for (NeuronKind kind : {NeuronKind::qlif, NeuronKind::lif}) {
        ModelSpec s = weather_spec(kind);
        s.n_features = 2;
        s.n_targets = 1;
        s.latent = 4;
        s.lstm_units = 3;
        s.window = 3;
        s.dropout1 = 0.0;
        s.dropout2 = 0.0;
        Model m(s, 13);

        Rng rng(17);
        // Glorot-initialized weights leave the spiking layer silent and the
        // relu/batchnorm pre-activations exactly at their kinks, where
        // central differences are undefined. Jitter every parameter off the
        // kinks and strengthen the spiking drive so spikes actually occur.
        for (auto& p : m.params()) {
            for (auto& v : p.value->data) v += rng.uniform(-0.1, 0.1);
            if (p.name == "l2.kernel")
                for (auto& v : p.value->data) v = rng.uniform(-1.5, 1.5);
            if (p.name == "l2.theta")
                for (auto& v : p.value->data) v = rng.uniform(1.0, 3.0);
        }

        Tensor x({4, 3, 2});
        fill_uniform(x, rng);
        Tensor target({4, 1});
        fill_uniform(target, rng);

        Tensor pred = m.forward(x, true, nullptr);
        const std::size_t n = pred.numel();
        Tensor grad(pred.shape);
        for (std::size_t i = 0; i < n; ++i)
            grad[i] = 2.0 * (pred[i] - target[i]) / double(n);
        m.backward(grad);

        auto params = m.params();
        auto loss = [&] {
            Tensor p = m.forward(x, true, nullptr);
            return mse_loss(p, target);
        };
        for (auto& p : params) {
            if (p.name.rfind("l1.", 0) == 0 || p.name.rfind("l2.", 0) == 0)
                continue;
            Tensor fd = finite_difference(*p.value, loss);
            CHECK_MESSAGE(max_rel_err(*p.grad, fd, 1e-5) < 2e-3, p.name);
        }
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    WindowedDataset ds = toy_dataset(120);
    TrainConfig cfg;
    cfg.max_epochs = 2;
    cfg.batch_size = 16;
    cfg.seed = 42;

    ModelSpec s = weather_spec(NeuronKind::qlif);
    s.n_features = 2;
    s.n_targets = 1;
    s.window = 8;
    s.latent = 8;
    s.lstm_units = 6;

    Model a(s, cfg.seed), b(s, cfg.seed);
    TrainResult ra = train(a, ds, cfg);
    TrainResult rb = train(b, ds, cfg);
    REQUIRE(ra.records.size() == rb.records.size());
    for (std::size_t i = 0; i < ra.records.size(); ++i) {
        CHECK(ra.records[i].train_loss == rb.records[i].train_loss);
        CHECK(ra.records[i].val_loss == rb.records[i].val_loss);
    }
    Tensor pa = a.predict(ds.X);
    Tensor pb = b.predict(ds.X);
    CHECK(max_abs_diff(pa, pb) == 0.0);
}

TEST_CASE("early stopping restores the best validation weights") {
    WindowedDataset ds = toy_dataset(160);
    TrainConfig cfg;
    cfg.max_epochs = 8;
    cfg.batch_size = 16;
    cfg.patience = 2;
    cfg.seed = 9;

    ModelSpec s = weather_spec(NeuronKind::lif);
    s.n_features = 2;
    s.n_targets = 1;
    s.window = 8;
    s.latent = 8;
    s.lstm_units = 6;

    Model m(s, cfg.seed);
    TrainResult r = train(m, ds, cfg);
    REQUIRE(!r.records.empty());
    double best = r.records[0].val_loss;
    int best_epoch = r.records[0].epoch;
    for (const auto& rec : r.records)
        if (rec.val_loss < best) {
            best = rec.val_loss;
            best_epoch = rec.epoch;
        }
    CHECK(r.best_val_loss == best);
    CHECK(r.best_epoch == best_epoch);

    // recomputing the validation loss on the restored weights agrees
    const std::size_t n_train = ds.n_train();
    const std::size_t n_val = std::size_t(std::floor(cfg.val_frac * double(n_train)));
    REQUIRE(n_val > 0);
    const std::size_t v0 = n_train - n_val;
    Tensor vx({n_val, 8, 2}), vy({n_val, 1});
    for (std::size_t i = 0; i < n_val; ++i) {
        std::copy_n(&ds.X.data[(v0 + i) * 16], 16, &vx.data[i * 16]);
        vy.at2(i, 0) = ds.y.at2(v0 + i, 0);
    }
    const double val = mse_loss(m.predict(vx), vy);
    CHECK(val == doctest::Approx(r.best_val_loss).epsilon(1e-9));
}

TEST_CASE("learns a clean sinusoid better than predicting the mean") {
    WindowedDataset ds = toy_dataset(200);
    TrainConfig cfg;
    cfg.max_epochs = 12;
    cfg.batch_size = 16;
    cfg.seed = 3;

    ModelSpec s = weather_spec(NeuronKind::lif);
    s.n_features = 2;
    s.n_targets = 1;
    s.window = 8;
    s.latent = 12;
    s.lstm_units = 8;

    Model m(s, cfg.seed);
    train(m, ds, cfg);

    const std::size_t n_test = ds.n_test();
    Tensor tx({n_test, 8, 2}), ty({n_test, 1});
    for (std::size_t i = 0; i < n_test; ++i) {
        std::copy_n(&ds.X.data[(ds.split + i) * 16], 16, &tx.data[i * 16]);
        ty.at2(i, 0) = ds.y.at2(ds.split + i, 0);
    }
    const double model_mse = mse_loss(m.predict(tx), ty);

    double mean = 0.0;
    for (std::size_t i = 0; i < ds.n_train(); ++i) mean += ds.y.at2(i, 0);
    mean /= double(ds.n_train());
    double baseline = 0.0;
    for (std::size_t i = 0; i < n_test; ++i) {
        const double d = ty.at2(i, 0) - mean;
        baseline += d * d;
    }
    baseline /= double(n_test);

    CHECK(model_mse < baseline);
}

TEST_CASE("checkpoint round-trip preserves predictions exactly") {
    const std::string path = "/tmp/qcast_test_model.qckpt";
    ModelSpec s = weather_spec(NeuronKind::qlif);
    Model m(s, 21);

    // perturb state away from init so the round-trip is non-trivial
    Rng rng(22);
    for (auto& [name, t] : m.state_tensors())
        for (auto& v : t->data) v += rng.uniform(-0.01, 0.01);

    Tensor x({5, 12, 4});
    fill_uniform(x, rng);
    Tensor before = m.predict(x);

    m.to_container().save(path);
    Model fresh(s, 999);  // different seed; state fully overwritten by load
    fresh.load_state(Container::load(path));
    Tensor after = fresh.predict(x);
    CHECK(max_abs_diff(before, after) == 0.0);
    std::remove(path.c_str());

    SUBCASE("kind mismatch rejected") {
        ModelSpec other = weather_spec(NeuronKind::lif);
        Model wrong(other, 1);
        Container c = m.to_container();
        CHECK_THROWS(wrong.load_state(c));
    }
}
