#pragma once

#include <cmath>
#include <cstdint>

namespace sdg {

/// Counter-based pseudo-random stream. Each (seed, stream) pair yields an
/// independent, platform-reproducible sequence; simulate_paths derives one
/// stream per path so results do not depend on the worker count.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t stream) {
        // SplitMix64 mixing of (seed, stream) into the initial state.
        state_ = mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
        state_ = mix(state_ ^ mix(stream + 0xBF58476D1CE4E5B9ULL));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on (0,1), never returning 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace sdg
