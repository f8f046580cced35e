#include "qcast/qlif.hpp"

#include <stdexcept>

namespace qcast {

namespace {

double clamp_prob(double a, const char* what) {
    if (a < -kProbTol || a > 1.0 + kProbTol)
        throw std::domain_error(std::string(what) +
                                ": probability out of [0,1]: " + std::to_string(a));
    if (a < 0.0) return 0.0;
    if (a > 1.0) return 1.0;
    return a;
}

}  // namespace

double encode_state(double alpha) {
    alpha = clamp_prob(alpha, "encode_state");
    return 2.0 * std::asin(std::sqrt(alpha));
}

double decode_angle(double phi) {
    double s = std::sin(phi / 2.0);
    return s * s;
}

double qlif_update(double phi, double theta_input) {
    double s = std::sin((phi + theta_input) / 2.0);
    return s * s;
}

double decay_angle(double alpha, double tau, double t1) {
    alpha = clamp_prob(alpha, "decay_angle");
    double relaxed = alpha * std::exp(-tau / t1);
    return -2.0 * std::asin(std::sqrt(relaxed));
}

double surrogate_value(double u) {
    return std::atan(M_PI * u) / M_PI + 0.5;
}

double surrogate_grad(double u) {
    return 1.0 / (1.0 + M_PI * M_PI * u * u);
}

QlifLayerParams qlif_init(std::size_t n_in, std::size_t n_neurons, Rng& rng) {
    QlifLayerParams p;
    p.kernel = Tensor({n_in, n_neurons});
    double limit = std::sqrt(6.0 / double(n_in + n_neurons));
    for (auto& w : p.kernel.data) w = rng.uniform(-limit, limit);
    p.theta = Tensor({n_neurons});
    for (auto& w : p.theta.data) w = rng.uniform(0.1, 1.0);
    p.tau_raw = Tensor({n_neurons});
    p.tau_raw.fill(5.0);
    return p;
}

Tensor qlif_layer_forward(const Tensor& inputs, const QlifLayerParams& params,
                          const QlifHyper& hyper, QlifCache& cache,
                          bool relaxed) {
    if (inputs.ndim() != 3 || inputs.dim(2) != params.n_in())
        throw std::invalid_argument("qlif_layer_forward: inputs " +
                                    inputs.shape_str() + " vs kernel n_in " +
                                    std::to_string(params.n_in()));
    const std::size_t B = inputs.dim(0), T = inputs.dim(1), F = inputs.dim(2);
    const std::size_t N = params.n_neurons();
    const double center =
        hyper.surrogate_center == SurrogateCenter::threshold ? hyper.threshold : 0.0;

    cache = QlifCache{};
    cache.inputs = inputs;
    cache.drive = Tensor({B, T, N});
    cache.gate = Tensor({B, T, N});
    cache.alpha_prev = Tensor({B, T, N});
    cache.alpha_new = Tensor({B, T, N});
    cache.spike = Tensor({B, T, N});
    cache.hyper = hyper;

    Tensor out({B, T, N});
    std::vector<double> alpha(N);  // carried state, one sample at a time

    for (std::size_t b = 0; b < B; ++b) {
        std::fill(alpha.begin(), alpha.end(), 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            const double* x = &inputs.data[(b * T + t) * F];
            for (std::size_t j = 0; j < N; ++j) {
                double a = 0.0;
                for (std::size_t i = 0; i < F; ++i)
                    a += x[i] * params.kernel.at2(i, j);
                const bool g = a > 0.0;
                const double tau = std::max(params.tau_raw[j], kTauMin);
                const double theta_in =
                    g ? params.theta[j] * a
                      : decay_angle(alpha[j], tau, hyper.t1);
                const double phi = encode_state(alpha[j]);
                double a_new = qlif_update(phi, theta_in);
                a_new = clamp_prob(a_new, "qlif_layer_forward");
                const bool spike = a_new >= hyper.threshold;

                const std::size_t idx = (b * T + t) * N + j;
                cache.drive[idx] = a;
                cache.gate[idx] = g ? 1.0 : 0.0;
                cache.alpha_prev[idx] = alpha[j];
                cache.alpha_new[idx] = a_new;
                cache.spike[idx] = spike ? 1.0 : 0.0;
                out[idx] = relaxed ? surrogate_value(a_new - center)
                                   : (spike ? 1.0 : 0.0);
                alpha[j] = spike ? 0.0 : a_new;
            }
        }
    }
    cache.valid = true;
    return out;
}

Tensor qlif_layer_backward(QlifCache& cache, const QlifLayerParams& params,
                           const Tensor& grad_out, QlifGrads& grads) {
    if (!cache.valid)
        throw std::logic_error("qlif_layer_backward: stale or missing cache");
    if (!grad_out.same_shape(cache.alpha_new))
        throw std::invalid_argument("qlif_layer_backward: grad_out shape");
    const std::size_t B = cache.inputs.dim(0), T = cache.inputs.dim(1),
                      F = cache.inputs.dim(2);
    const std::size_t N = params.n_neurons();
    const QlifHyper& h = cache.hyper;
    const double center =
        h.surrogate_center == SurrogateCenter::threshold ? h.threshold : 0.0;

    grads.kernel = Tensor({F, N});
    grads.theta = Tensor({N});
    grads.tau_raw = Tensor({N});
    Tensor grad_in({B, T, F});

    std::vector<double> g_alpha(N);  // dL/d(carried alpha) from step t+1

    for (std::size_t b = 0; b < B; ++b) {
        std::fill(g_alpha.begin(), g_alpha.end(), 0.0);
        for (std::size_t t = T; t-- > 0;) {
            const double* x = &cache.inputs.data[(b * T + t) * F];
            double* gx = &grad_in.data[(b * T + t) * F];
            for (std::size_t j = 0; j < N; ++j) {
                const std::size_t idx = (b * T + t) * N + j;
                const double a = cache.drive[idx];
                const bool g = cache.gate[idx] != 0.0;
                const double ap = cache.alpha_prev[idx];
                const double an = cache.alpha_new[idx];
                const bool spike = cache.spike[idx] != 0.0;
                const double tau = std::max(params.tau_raw[j], kTauMin);

                // spike output via surrogate; carried state via the
                // no-spike branch only (reset is a constant).
                double d_an = grad_out[idx] * surrogate_grad(an - center);
                if (!spike) d_an += g_alpha[j];

                // alpha_new = sin^2((phi + theta_in)/2)
                const double phi = encode_state(ap);
                const double theta_in =
                    g ? params.theta[j] * a : decay_angle(ap, tau, h.t1);
                const double d_angle = d_an * 0.5 * std::sin(phi + theta_in);

                double d_ap = 0.0;
                if (ap > 0.0 && ap < 1.0)
                    d_ap += d_angle / std::sqrt(ap * (1.0 - ap));  // via phi

                if (g) {
                    grads.theta[j] += d_angle * a;
                    const double da = d_angle * params.theta[j];
                    for (std::size_t i = 0; i < F; ++i) {
                        grads.kernel.at2(i, j) += da * x[i];
                        gx[i] += da * params.kernel.at2(i, j);
                    }
                } else {
                    // theta_in = gamma(ap, tau)
                    const double e = std::exp(-tau / h.t1);
                    const double s2 = ap * e;
                    if (s2 > 0.0 && s2 < 1.0) {
                        const double s = std::sqrt(s2);
                        const double root = std::sqrt(1.0 - s2);
                        d_ap += d_angle * (-e / (s * root));
                        if (params.tau_raw[j] > kTauMin)
                            grads.tau_raw[j] += d_angle * s / (h.t1 * root);
                    }
                }
                g_alpha[j] = d_ap;
            }
        }
    }
    cache.valid = false;
    return grad_in;
}

}  // namespace qcast
