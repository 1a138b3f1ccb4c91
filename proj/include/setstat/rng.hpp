#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace setstat {

/// Seedable counter-based generator: the i-th output is the splitmix64
/// finalizer applied to seed + i * golden gamma.  Matches the reference
/// splitmix64 stream, so published test vectors pin the implementation
/// across platforms.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed), counter_(0) {}

    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(seed_ + golden_gamma * counter_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    /// Standard normal via Box-Muller; consumes two uniforms per draw.
    double normal() {
        const double u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log1p(-u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Independent child stream derived from this generator's seed and the
    /// given stream index; deterministic and order-free.
    CounterRng fork(std::uint64_t stream) const {
        return CounterRng(mix(seed_ ^ mix(stream + golden_gamma)));
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

}  // namespace setstat
