#include "qcast/lif.hpp"

#include <stdexcept>

namespace qcast {

double lif_step(double u_prev, double i_in, double tau) {
    const double beta = std::exp(-1.0 / std::max(tau, kTauMin));
    return beta * u_prev + (1.0 - beta) * i_in;
}

LifLayerParams lif_init(std::size_t n_in, std::size_t n_neurons, Rng& rng) {
    LifLayerParams p;
    p.kernel = Tensor({n_in, n_neurons});
    double limit = std::sqrt(6.0 / double(n_in + n_neurons));
    for (auto& w : p.kernel.data) w = rng.uniform(-limit, limit);
    p.bias = Tensor({n_neurons});
    p.tau_raw = Tensor({n_neurons});
    p.tau_raw.fill(5.0);
    return p;
}

Tensor lif_layer_forward(const Tensor& inputs, const LifLayerParams& params,
                         const LifHyper& hyper, LifCache& cache,
                         bool relaxed) {
    if (inputs.ndim() != 3 || inputs.dim(2) != params.n_in())
        throw std::invalid_argument("lif_layer_forward: inputs " +
                                    inputs.shape_str() + " vs kernel n_in " +
                                    std::to_string(params.n_in()));
    const std::size_t B = inputs.dim(0), T = inputs.dim(1), F = inputs.dim(2);
    const std::size_t N = params.n_neurons();
    const double center =
        hyper.surrogate_center == SurrogateCenter::threshold ? hyper.threshold : 0.0;

    cache = LifCache{};
    cache.inputs = inputs;
    cache.drive = Tensor({B, T, N});
    cache.u_prev = Tensor({B, T, N});
    cache.u_new = Tensor({B, T, N});
    cache.spike = Tensor({B, T, N});
    cache.hyper = hyper;

    Tensor out({B, T, N});
    std::vector<double> u(N);

    for (std::size_t b = 0; b < B; ++b) {
        std::fill(u.begin(), u.end(), 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            const double* x = &inputs.data[(b * T + t) * F];
            for (std::size_t j = 0; j < N; ++j) {
                double i_in = params.bias[j];
                for (std::size_t i = 0; i < F; ++i)
                    i_in += x[i] * params.kernel.at2(i, j);
                const double tau = std::max(params.tau_raw[j], kTauMin);
                const double u_new = lif_step(u[j], i_in, tau);
                const bool spike = u_new >= hyper.threshold;

                const std::size_t idx = (b * T + t) * N + j;
                cache.drive[idx] = i_in;
                cache.u_prev[idx] = u[j];
                cache.u_new[idx] = u_new;
                cache.spike[idx] = spike ? 1.0 : 0.0;
                out[idx] = relaxed ? surrogate_value(u_new - center)
                                   : (spike ? 1.0 : 0.0);
                u[j] = spike ? 0.0 : u_new;
            }
        }
    }
    cache.valid = true;
    return out;
}

Tensor lif_layer_backward(LifCache& cache, const LifLayerParams& params,
                          const Tensor& grad_out, LifGrads& grads) {
    if (!cache.valid)
        throw std::logic_error("lif_layer_backward: stale or missing cache");
    if (!grad_out.same_shape(cache.u_new))
        throw std::invalid_argument("lif_layer_backward: grad_out shape");
    const std::size_t B = cache.inputs.dim(0), T = cache.inputs.dim(1),
                      F = cache.inputs.dim(2);
    const std::size_t N = params.n_neurons();
    const double center = cache.hyper.surrogate_center == SurrogateCenter::threshold
                              ? cache.hyper.threshold
                              : 0.0;

    grads.kernel = Tensor({F, N});
    grads.bias = Tensor({N});
    grads.tau_raw = Tensor({N});
    Tensor grad_in({B, T, F});

    std::vector<double> g_u(N);

    for (std::size_t b = 0; b < B; ++b) {
        std::fill(g_u.begin(), g_u.end(), 0.0);
        for (std::size_t t = T; t-- > 0;) {
            const double* x = &cache.inputs.data[(b * T + t) * F];
            double* gx = &grad_in.data[(b * T + t) * F];
            for (std::size_t j = 0; j < N; ++j) {
                const std::size_t idx = (b * T + t) * N + j;
                const double u_new = cache.u_new[idx];
                const bool spike = cache.spike[idx] != 0.0;
                const double tau = std::max(params.tau_raw[j], kTauMin);
                const double beta = std::exp(-1.0 / tau);

                double d_un = grad_out[idx] * surrogate_grad(u_new - center);
                if (!spike) d_un += g_u[j];

                const double di = d_un * (1.0 - beta);
                grads.bias[j] += di;
                for (std::size_t i = 0; i < F; ++i) {
                    grads.kernel.at2(i, j) += di * x[i];
                    gx[i] += di * params.kernel.at2(i, j);
                }
                if (params.tau_raw[j] > kTauMin)
                    grads.tau_raw[j] += d_un * (cache.u_prev[idx] - cache.drive[idx]) *
                                        beta / (tau * tau);
                g_u[j] = d_un * beta;
            }
        }
    }
    cache.valid = false;
    return grad_in;
}

}  // namespace qcast
