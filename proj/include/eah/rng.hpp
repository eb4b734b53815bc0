#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace eah {

// Deterministic random source. All variates are derived from the raw
// mt19937_64 stream by fixed arithmetic, so a seed reproduces the same
// realization on any platform (std::*_distribution is not portable).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on (0, 1); never returns 0, so log(u) is safe.
    double uniform() {
        const std::uint64_t bits = engine_() >> 11;  // 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Index in [0, weights.size()) with probability proportional to weights.
    std::size_t categorical(std::span<const double> weights, double total) {
        double x = uniform() * total;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            x -= weights[k];
            if (x <= 0.0) return k;
        }
        return weights.size() - 1;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace eah
