#pragma once

// Seeded random streams. Stream (seed, index) is bit-reproducible on every
// platform: the engine and seed_seq are fully specified by the standard, and
// the samplers below use only raw engine output.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sdr {

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x5d52u};
        engine_.seed(seq);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal by Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Chi-squared with integer degrees of freedom, as a sum of squared normals.
    double chisq(int df) {
        double s = 0.0;
        for (int k = 0; k < df; ++k) {
            const double z = normal();
            s += z * z;
        }
        return s;
    }

    double student_t(int df) { return normal() / std::sqrt(chisq(df) / df); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sdr
