#pragma once

#include <cmath>

#include "qcast/qlif.hpp"  // kTauMin, surrogate, SurrogateCenter
#include "qcast/rng.hpp"
#include "qcast/tensor.hpp"

namespace qcast {

// One membrane update: beta*u + (1-beta)*i with beta = e^(-1/tau).
double lif_step(double u_prev, double i_in, double tau);

struct LifHyper {
    double threshold = 0.75;
    SurrogateCenter surrogate_center = SurrogateCenter::threshold;
};

struct LifLayerParams {
    Tensor kernel;   // [n_in x n_neurons]
    Tensor bias;     // [n_neurons]
    Tensor tau_raw;  // [n_neurons]

    std::size_t n_in() const { return kernel.dim(0); }
    std::size_t n_neurons() const { return kernel.dim(1); }
    std::size_t count() const {
        return kernel.numel() + bias.numel() + tau_raw.numel();
    }
};

LifLayerParams lif_init(std::size_t n_in, std::size_t n_neurons, Rng& rng);

struct LifCache {
    Tensor inputs;  // [B x T x n_in]
    Tensor drive;   // i = x.kernel + bias
    Tensor u_prev;  // membrane entering the step
    Tensor u_new;
    Tensor spike;
    LifHyper hyper;
    bool valid = false;
};

struct LifGrads {
    Tensor kernel, bias, tau_raw;
};

// Same shape contract, surrogate, and reset semantics as the QLIF layer;
// only the state update differs.
Tensor lif_layer_forward(const Tensor& inputs, const LifLayerParams& params,
                         const LifHyper& hyper, LifCache& cache,
                         bool relaxed = false);

Tensor lif_layer_backward(LifCache& cache, const LifLayerParams& params,
                          const Tensor& grad_out, LifGrads& grads);

}  // namespace qcast
