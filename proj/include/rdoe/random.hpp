#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace rdoe {

/// Seeded generator with a fixed, portable bit stream.
///
/// Raw bits come from std::mt19937_64 (the 64-bit Mersenne Twister, whose
/// output sequence is fixed by the C++ standard). Uniforms take the top 53
/// bits. Normals use the Box-Muller transform, consuming exactly two uniforms
/// per generated pair; the second value of a pair is cached.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace rdoe
