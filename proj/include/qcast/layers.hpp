#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcast/rng.hpp"
#include "qcast/tensor.hpp"

namespace qcast {

enum class Activation { relu, linear };

// Fully connected y = act(x.W + b). A 3-d input [B x T x n_in] is treated
// time-distributed: the same map applied independently per timestep.
struct Dense {
    Tensor W, b;    // [n_in x units], [units]
    Tensor gW, gb;  // last backward's gradients
    Activation act = Activation::linear;

    struct Cache {
        Tensor x, pre;
        bool valid = false;
    };

    void init(std::size_t n_in, std::size_t units, Activation a, Rng& rng);
    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(Cache& cache, const Tensor& grad_out);
    std::size_t count() const { return W.numel() + b.numel(); }
};

// Inverted dropout: training zeroes with probability `rate` and scales
// survivors by 1/(1-rate); inference is the identity.
struct Dropout {
    double rate = 0.0;

    struct Cache {
        Tensor mask;  // already scaled by 1/(1-rate)
        bool identity = true;
        bool valid = false;
    };

    Tensor forward(const Tensor& x, bool training, Rng& rng, Cache& cache) const;
    Tensor backward(Cache& cache, const Tensor& grad_out) const;
};

// Per-channel normalization over the pooled batch*time axis of a
// [B x T x C] tensor. Training uses batch moments (biased variance) and
// updates moving statistics; inference uses the moving statistics.
struct BatchNorm {
    Tensor gamma, beta;
    Tensor moving_mean, moving_var;
    Tensor ggamma, gbeta;
    double eps = 1e-3;
    double momentum = 0.99;

    struct Cache {
        Tensor xhat;
        std::vector<double> inv_std;
        std::size_t rows = 0;
        bool valid = false;
    };

    void init(std::size_t channels);
    Tensor forward(const Tensor& x, bool training, Cache& cache);
    Tensor backward(Cache& cache, const Tensor& grad_out);
    std::size_t count() const { return gamma.numel() + beta.numel(); }
};

// Single-layer LSTM returning only the final hidden state. Gate order in
// the fused matrices is i, f, g (candidate), o.
struct Lstm {
    Tensor Wx, Wh, b;  // [n_in x 4U], [U x 4U], [4U]
    Tensor gWx, gWh, gb;
    std::size_t n_in = 0, units = 0;

    struct Cache {
        Tensor x;      // [B x T x n_in]
        Tensor gates;  // post-activation, [B x T x 4U]
        Tensor c;      // cell states, [B x T x U]
        Tensor h;      // hidden states, [B x T x U]
        bool valid = false;
    };

    void init(std::size_t n_in_, std::size_t units_, Rng& rng);
    Tensor forward(const Tensor& x, Cache& cache) const;  // -> [B x units]
    Tensor backward(Cache& cache, const Tensor& grad_hT);
    std::size_t count() const { return Wx.numel() + Wh.numel() + b.numel(); }
};

// --- optimizer ----------------------------------------------------------

struct Param {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
    bool l2 = false;  // kernel of a dense layer -> L2 regularized
};

struct AdamConfig {
    double lr0 = 1e-3;
    double decay_rate = 0.96;  // staircase multiplier per epoch
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    double l2 = 1e-4;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    // Bias-corrected Adam with lr = lr0 * decay^epoch. L2-flagged params
    // see an effective gradient of grad + 2*l2*param. Aborts on
    // non-finite gradients.
    void step(std::vector<Param>& params, int epoch);

    std::uint64_t steps_taken() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    std::uint64_t step_ = 0;
};

double glorot_limit(std::size_t fan_in, std::size_t fan_out);

}  // namespace qcast
