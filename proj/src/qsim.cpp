#include "qcast/qsim.hpp"

#include <cmath>
#include <stdexcept>

namespace qcast {

QubitState apply_rx(const QubitState& state, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    const std::complex<double> mis{0.0, -s};  // -i sin(angle/2)
    QubitState out;
    out.amp0 = c * state.amp0 + mis * state.amp1;
    out.amp1 = mis * state.amp0 + c * state.amp1;
    return out;
}

double measure_p1(const QubitState& state) {
    return std::norm(state.amp1);
}

ShotResult sample_shots(const QubitState& state, std::uint64_t shots,
                        std::uint64_t seed) {
    if (shots == 0) throw std::invalid_argument("sample_shots: shots = 0");
    Rng rng(seed);
    ShotResult r;
    r.shots = shots;
    r.ones = rng.binomial(shots, measure_p1(state));
    r.p1_hat = double(r.ones) / double(shots);
    return r;
}

}  // namespace qcast
