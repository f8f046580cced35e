#include "qcast/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace qcast {

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / double(fan_in + fan_out));
}

namespace {

// Flatten leading dims: [B x n] stays, [B x T x n] -> [(B*T) x n].
std::size_t flat_rows(const Tensor& x, std::size_t n_in, const char* what) {
    if (x.ndim() == 2 && x.dim(1) == n_in) return x.dim(0);
    if (x.ndim() == 3 && x.dim(2) == n_in) return x.dim(0) * x.dim(1);
    throw std::invalid_argument(std::string(what) + ": bad input shape " +
                                x.shape_str());
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// --- Dense --------------------------------------------------------------

void Dense::init(std::size_t n_in, std::size_t units, Activation a, Rng& rng) {
    act = a;
    W = Tensor({n_in, units});
    const double limit = glorot_limit(n_in, units);
    for (auto& w : W.data) w = rng.uniform(-limit, limit);
    b = Tensor({units});
    gW = Tensor({n_in, units});
    gb = Tensor({units});
}

Tensor Dense::forward(const Tensor& x, Cache& cache) const {
    const std::size_t n_in = W.dim(0), units = W.dim(1);
    const std::size_t rows = flat_rows(x, n_in, "Dense::forward");

    std::vector<std::size_t> out_shape = x.shape;
    out_shape.back() = units;
    Tensor y(out_shape);
    cache = Cache{};
    cache.x = x;
    cache.pre = Tensor(out_shape);

    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = &x.data[r * n_in];
        double* pr = &cache.pre.data[r * units];
        double* yr = &y.data[r * units];
        for (std::size_t j = 0; j < units; ++j) {
            double s = b[j];
            for (std::size_t i = 0; i < n_in; ++i) s += xr[i] * W.at2(i, j);
            pr[j] = s;
            yr[j] = act == Activation::relu ? (s > 0.0 ? s : 0.0) : s;
        }
    }
    cache.valid = true;
    return y;
}

Tensor Dense::backward(Cache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw std::logic_error("Dense::backward: stale cache");
    const std::size_t n_in = W.dim(0), units = W.dim(1);
    const std::size_t rows = flat_rows(cache.x, n_in, "Dense::backward");
    if (grad_out.numel() != rows * units)
        throw std::invalid_argument("Dense::backward: grad_out shape");

    gW.fill(0.0);
    gb.fill(0.0);
    Tensor grad_in(cache.x.shape);

    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = &cache.x.data[r * n_in];
        const double* pr = &cache.pre.data[r * units];
        const double* go = &grad_out.data[r * units];
        double* gi = &grad_in.data[r * n_in];
        for (std::size_t j = 0; j < units; ++j) {
            double d = go[j];
            if (act == Activation::relu && pr[j] <= 0.0) d = 0.0;
            if (d == 0.0) continue;
            gb[j] += d;
            for (std::size_t i = 0; i < n_in; ++i) {
                gW.at2(i, j) += d * xr[i];
                gi[i] += d * W.at2(i, j);
            }
        }
    }
    cache.valid = false;
    return grad_in;
}

// --- Dropout ------------------------------------------------------------

Tensor Dropout::forward(const Tensor& x, bool training, Rng& rng,
                        Cache& cache) const {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("Dropout: rate must be in [0,1)");
    cache = Cache{};
    if (!training || rate == 0.0) {
        cache.identity = true;
        cache.valid = true;
        return x;
    }
    cache.identity = false;
    cache.mask = Tensor(x.shape);
    const double scale = 1.0 / (1.0 - rate);
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : scale;
        cache.mask[i] = m;
        y[i] = x[i] * m;
    }
    cache.valid = true;
    return y;
}

Tensor Dropout::backward(Cache& cache, const Tensor& grad_out) const {
    if (!cache.valid) throw std::logic_error("Dropout::backward: stale cache");
    cache.valid = false;
    if (cache.identity) return grad_out;
    Tensor grad_in(grad_out.shape);
    for (std::size_t i = 0; i < grad_out.numel(); ++i)
        grad_in[i] = grad_out[i] * cache.mask[i];
    return grad_in;
}

// --- BatchNorm ----------------------------------------------------------

void BatchNorm::init(std::size_t channels) {
    gamma = Tensor({channels});
    gamma.fill(1.0);
    beta = Tensor({channels});
    moving_mean = Tensor({channels});
    moving_var = Tensor({channels});
    moving_var.fill(1.0);
    ggamma = Tensor({channels});
    gbeta = Tensor({channels});
}

Tensor BatchNorm::forward(const Tensor& x, bool training, Cache& cache) {
    const std::size_t C = gamma.numel();
    if (x.ndim() != 3 || x.dim(2) != C)
        throw std::invalid_argument("BatchNorm::forward: input " + x.shape_str());
    const std::size_t rows = x.dim(0) * x.dim(1);
    if (training && rows < 2)
        throw std::invalid_argument("BatchNorm::forward: degenerate batch");

    cache = Cache{};
    cache.rows = rows;
    cache.inv_std.assign(C, 0.0);
    cache.xhat = Tensor(x.shape);
    Tensor y(x.shape);

    std::vector<double> mean(C, 0.0), var(C, 0.0);
    if (training) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < C; ++c) mean[c] += x[r * C + c];
        for (std::size_t c = 0; c < C; ++c) mean[c] /= double(rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < C; ++c) {
                const double d = x[r * C + c] - mean[c];
                var[c] += d * d;
            }
        for (std::size_t c = 0; c < C; ++c) var[c] /= double(rows);
        for (std::size_t c = 0; c < C; ++c) {
            moving_mean[c] = momentum * moving_mean[c] + (1.0 - momentum) * mean[c];
            moving_var[c] = momentum * moving_var[c] + (1.0 - momentum) * var[c];
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = moving_mean[c];
            var[c] = moving_var[c];
        }
    }
    for (std::size_t c = 0; c < C; ++c)
        cache.inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const double xh = (x[r * C + c] - mean[c]) * cache.inv_std[c];
            cache.xhat[r * C + c] = xh;
            y[r * C + c] = gamma[c] * xh + beta[c];
        }
    cache.valid = true;
    return y;
}

Tensor BatchNorm::backward(Cache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw std::logic_error("BatchNorm::backward: stale cache");
    const std::size_t C = gamma.numel();
    const std::size_t rows = cache.rows;
    if (grad_out.numel() != rows * C)
        throw std::invalid_argument("BatchNorm::backward: grad_out shape");

    ggamma.fill(0.0);
    gbeta.fill(0.0);
    std::vector<double> sum_dxh(C, 0.0), sum_dxh_xh(C, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const double dy = grad_out[r * C + c];
            const double xh = cache.xhat[r * C + c];
            ggamma[c] += dy * xh;
            gbeta[c] += dy;
            const double dxh = dy * gamma[c];
            sum_dxh[c] += dxh;
            sum_dxh_xh[c] += dxh * xh;
        }

    Tensor grad_in(grad_out.shape);
    const double m = double(rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const double dxh = grad_out[r * C + c] * gamma[c];
            const double xh = cache.xhat[r * C + c];
            grad_in[r * C + c] =
                cache.inv_std[c] *
                (dxh - sum_dxh[c] / m - xh * sum_dxh_xh[c] / m);
        }
    cache.valid = false;
    return grad_in;
}

// --- Lstm ---------------------------------------------------------------

void Lstm::init(std::size_t n_in_, std::size_t units_, Rng& rng) {
    n_in = n_in_;
    units = units_;
    Wx = Tensor({n_in, 4 * units});
    Wh = Tensor({units, 4 * units});
    b = Tensor({4 * units});
    const double lx = glorot_limit(n_in, 4 * units);
    for (auto& w : Wx.data) w = rng.uniform(-lx, lx);
    const double lh = glorot_limit(units, 4 * units);
    for (auto& w : Wh.data) w = rng.uniform(-lh, lh);
    // forget-gate bias starts at 1
    for (std::size_t j = units; j < 2 * units; ++j) b[j] = 1.0;
    gWx = Tensor({n_in, 4 * units});
    gWh = Tensor({units, 4 * units});
    gb = Tensor({4 * units});
}

Tensor Lstm::forward(const Tensor& x, Cache& cache) const {
    if (x.ndim() != 3 || x.dim(2) != n_in)
        throw std::invalid_argument("Lstm::forward: input " + x.shape_str());
    const std::size_t B = x.dim(0), T = x.dim(1), U = units;

    cache = Cache{};
    cache.x = x;
    cache.gates = Tensor({B, T, 4 * U});
    cache.c = Tensor({B, T, U});
    cache.h = Tensor({B, T, U});
    Tensor hT({B, U});

    std::vector<double> z(4 * U);
    for (std::size_t bi = 0; bi < B; ++bi) {
        std::vector<double> h_prev(U, 0.0), c_prev(U, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            const double* xt = &x.data[(bi * T + t) * n_in];
            for (std::size_t j = 0; j < 4 * U; ++j) z[j] = b[j];
            for (std::size_t i = 0; i < n_in; ++i) {
                const double xv = xt[i];
                if (xv == 0.0) continue;
                const double* wr = &Wx.data[i * 4 * U];
                for (std::size_t j = 0; j < 4 * U; ++j) z[j] += xv * wr[j];
            }
            for (std::size_t i = 0; i < U; ++i) {
                const double hv = h_prev[i];
                if (hv == 0.0) continue;
                const double* wr = &Wh.data[i * 4 * U];
                for (std::size_t j = 0; j < 4 * U; ++j) z[j] += hv * wr[j];
            }
            double* g = &cache.gates.data[(bi * T + t) * 4 * U];
            double* ct = &cache.c.data[(bi * T + t) * U];
            double* ht = &cache.h.data[(bi * T + t) * U];
            for (std::size_t j = 0; j < U; ++j) {
                const double ig = sigmoid(z[j]);
                const double fg = sigmoid(z[U + j]);
                const double cand = std::tanh(z[2 * U + j]);
                const double og = sigmoid(z[3 * U + j]);
                g[j] = ig;
                g[U + j] = fg;
                g[2 * U + j] = cand;
                g[3 * U + j] = og;
                const double c_new = fg * c_prev[j] + ig * cand;
                ct[j] = c_new;
                ht[j] = og * std::tanh(c_new);
            }
            for (std::size_t j = 0; j < U; ++j) {
                c_prev[j] = ct[j];
                h_prev[j] = ht[j];
            }
        }
        for (std::size_t j = 0; j < U; ++j) hT.at2(bi, j) = h_prev[j];
    }
    cache.valid = true;
    return hT;
}

Tensor Lstm::backward(Cache& cache, const Tensor& grad_hT) {
    if (!cache.valid) throw std::logic_error("Lstm::backward: stale cache");
    const std::size_t B = cache.x.dim(0), T = cache.x.dim(1), U = units;
    require_shape(grad_hT, {B, U}, "Lstm::backward");

    gWx.fill(0.0);
    gWh.fill(0.0);
    gb.fill(0.0);
    Tensor grad_in({B, T, n_in});

    std::vector<double> dh(U), dc(U), dz(4 * U);
    for (std::size_t bi = 0; bi < B; ++bi) {
        for (std::size_t j = 0; j < U; ++j) {
            dh[j] = grad_hT.at2(bi, j);
            dc[j] = 0.0;
        }
        for (std::size_t t = T; t-- > 0;) {
            const double* g = &cache.gates.data[(bi * T + t) * 4 * U];
            const double* ct = &cache.c.data[(bi * T + t) * U];
            const double* c_prev =
                t > 0 ? &cache.c.data[(bi * T + t - 1) * U] : nullptr;
            const double* h_prev =
                t > 0 ? &cache.h.data[(bi * T + t - 1) * U] : nullptr;
            const double* xt = &cache.x.data[(bi * T + t) * n_in];

            for (std::size_t j = 0; j < U; ++j) {
                const double ig = g[j], fg = g[U + j], cand = g[2 * U + j],
                             og = g[3 * U + j];
                const double tc = std::tanh(ct[j]);
                const double dct = dc[j] + dh[j] * og * (1.0 - tc * tc);
                const double cp = t > 0 ? c_prev[j] : 0.0;
                dz[j] = dct * cand * ig * (1.0 - ig);              // input gate
                dz[U + j] = dct * cp * fg * (1.0 - fg);            // forget gate
                dz[2 * U + j] = dct * ig * (1.0 - cand * cand);    // candidate
                dz[3 * U + j] = dh[j] * tc * og * (1.0 - og);      // output gate
                dc[j] = dct * fg;
            }
            for (std::size_t j = 0; j < 4 * U; ++j) gb[j] += dz[j];
            double* gx = &grad_in.data[(bi * T + t) * n_in];
            for (std::size_t i = 0; i < n_in; ++i) {
                double* gwr = &gWx.data[i * 4 * U];
                const double* wr = &Wx.data[i * 4 * U];
                double acc = 0.0;
                const double xv = xt[i];
                for (std::size_t j = 0; j < 4 * U; ++j) {
                    gwr[j] += xv * dz[j];
                    acc += wr[j] * dz[j];
                }
                gx[i] = acc;
            }
            std::fill(dh.begin(), dh.end(), 0.0);
            if (t > 0) {
                for (std::size_t i = 0; i < U; ++i) {
                    double* gwr = &gWh.data[i * 4 * U];
                    const double* wr = &Wh.data[i * 4 * U];
                    double acc = 0.0;
                    const double hv = h_prev[i];
                    for (std::size_t j = 0; j < 4 * U; ++j) {
                        gwr[j] += hv * dz[j];
                        acc += wr[j] * dz[j];
                    }
                    dh[i] = acc;
                }
            }
        }
    }
    cache.valid = false;
    return grad_in;
}

// --- Adam ---------------------------------------------------------------

void Adam::step(std::vector<Param>& params, int epoch) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.value->shape);
            v_.emplace_back(p.value->shape);
        }
    }
    if (m_.size() != params.size())
        throw std::logic_error("Adam::step: parameter set changed");

    ++step_;
    const double lr = cfg_.lr0 * std::pow(cfg_.decay_rate, epoch);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));

    for (std::size_t k = 0; k < params.size(); ++k) {
        Param& p = params[k];
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (std::size_t i = 0; i < p.value->numel(); ++i) {
            double grad = (*p.grad)[i];
            if (!std::isfinite(grad))
                throw std::runtime_error("Adam::step: non-finite gradient in " +
                                         p.name);
            if (p.l2) grad += 2.0 * cfg_.l2 * (*p.value)[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad * grad;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            (*p.value)[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

}  // namespace qcast
