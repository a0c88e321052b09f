#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace adabatch {

/// Deterministic random source identified by a (seed, stream) pair.
///
/// The raw engine is std::mt19937_64 seeded through std::seed_seq; both are
/// fully specified by the standard, so a given (seed, stream) reproduces the
/// same raw 64-bit sequence everywhere. Uniforms take the top 53 bits of one
/// raw draw, normals come from the trigonometric Box-Muller transform on two
/// uniforms (second value of each pair cached). Replications derive
/// independent sources as RngStream(seed, replicationIndex).
///
/// Not safe to share across concurrent callers; use one stream per worker.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniformOpen() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal draw (Box-Muller; one spare cached per pair).
    double normal() {
        if (hasSpare_) {
            hasSpare_ = false;
            return spare_;
        }
        const double u1 = uniformOpen();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        hasSpare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

}  // namespace adabatch
