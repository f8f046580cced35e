#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qcast {

// Seeded generator used everywhere randomness is needed. Built on
// std::mt19937_64 (fully specified output sequence) with hand-rolled
// uniform conversion, so results are identical across platforms and
// standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is negligible for n << 2^64
        return gen_() % n;
    }

    // Bernoulli(p) trial.
    bool bernoulli(double p) { return uniform() < p; }

    // Binomial(n, p) by direct Bernoulli summation.
    std::uint64_t binomial(std::uint64_t n, double p) {
        std::uint64_t k = 0;
        for (std::uint64_t i = 0; i < n; ++i)
            if (uniform() < p) ++k;
        return k;
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    // Derive an independent stream (e.g. per-epoch dropout).
    Rng fork() { return Rng(gen_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 gen_;
};

}  // namespace qcast
