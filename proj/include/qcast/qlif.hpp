#pragma once

#include <cmath>
#include <cstdint>

#include "qcast/rng.hpp"
#include "qcast/tensor.hpp"

namespace qcast {

inline constexpr double kTauMin = 1e-3;
inline constexpr double kProbTol = 1e-9;

// --- scalar neuron math -------------------------------------------------

// phi = 2*arcsin(sqrt(alpha)); maps excitation probability to a rotation
// angle in [0, pi]. Inputs outside [0,1] by more than kProbTol are errors.
double encode_state(double alpha);

// sin^2(phi/2); inverse of encode_state on [0,1].
double decode_angle(double phi);

// Excitation after the depth-2 Rx circuit: sin^2((phi + theta)/2).
double qlif_update(double phi, double theta_input);

// Relaxation angle gamma = -2*arcsin(sqrt(alpha * e^(-tau/t1))).
double decay_angle(double alpha, double tau, double t1);

// Smooth spike stand-in (1/pi)*arctan(pi*u) + 0.5 and its derivative
// 1/(1 + pi^2 u^2).
double surrogate_value(double u);
double surrogate_grad(double u);

// --- layer --------------------------------------------------------------

enum class SurrogateCenter { threshold, zero };

struct QlifHyper {
    double threshold = 0.75;
    double t1 = 10.0;
    SurrogateCenter surrogate_center = SurrogateCenter::threshold;
};

struct QlifLayerParams {
    Tensor kernel;   // [n_in x n_neurons]
    Tensor theta;    // [n_neurons]
    Tensor tau_raw;  // [n_neurons]

    std::size_t n_in() const { return kernel.dim(0); }
    std::size_t n_neurons() const { return kernel.dim(1); }
    std::size_t count() const {
        return kernel.numel() + theta.numel() + tau_raw.numel();
    }
};

QlifLayerParams qlif_init(std::size_t n_in, std::size_t n_neurons, Rng& rng);

// Everything backward needs, recorded per (sample, timestep, neuron).
struct QlifCache {
    Tensor inputs;      // [B x T x n_in]
    Tensor drive;       // a = x.kernel
    Tensor gate;        // g = [a > 0]
    Tensor alpha_prev;  // carried alpha entering the step
    Tensor alpha_new;   // post-circuit excitation
    Tensor spike;       // hard spike output
    QlifHyper hyper;
    bool valid = false;
};

struct QlifGrads {
    Tensor kernel, theta, tau_raw;
};

// Batched forward over [B x T x n_in]. State starts at alpha = 0 for every
// sample and never carries across samples. When `relaxed` is set the
// emitted tensor is surrogate_value(alpha_new - center) instead of the hard
// spike; the carried state and every branch decision are unchanged (used by
// the finite-difference tests).
Tensor qlif_layer_forward(const Tensor& inputs, const QlifLayerParams& params,
                          const QlifHyper& hyper, QlifCache& cache,
                          bool relaxed = false);

// BPTT through the carried alpha. The threshold uses surrogate_grad at
// u = alpha_new - center; gates and the spike-reset branch are
// straight-through constants.
Tensor qlif_layer_backward(QlifCache& cache, const QlifLayerParams& params,
                           const Tensor& grad_out, QlifGrads& grads);

}  // namespace qcast
