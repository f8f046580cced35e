#pragma once

#include <complex>
#include <cstdint>

#include "qcast/rng.hpp"

namespace qcast {

// Exact single-qubit state vector. Amplitudes at double precision; no
// noise model.
struct QubitState {
    std::complex<double> amp0{1.0, 0.0};
    std::complex<double> amp1{0.0, 0.0};

    double norm_sq() const {
        return std::norm(amp0) + std::norm(amp1);
    }
};

struct ShotResult {
    std::uint64_t shots = 0;
    std::uint64_t ones = 0;
    double p1_hat = 0.0;
};

// Rx(angle) = cos(angle/2) I - i sin(angle/2) X.
QubitState apply_rx(const QubitState& state, double angle);

// P(|1>) = |amp1|^2.
double measure_p1(const QubitState& state);

// ones ~ Binomial(shots, measure_p1(state)) from a seeded mt19937_64
// stream (see Rng); same seed gives identical results everywhere.
ShotResult sample_shots(const QubitState& state, std::uint64_t shots,
                        std::uint64_t seed);

}  // namespace qcast
