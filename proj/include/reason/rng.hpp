#pragma once

#include <cmath>
#include <cstdint>

namespace reason::rng {

// SplitMix64 (Steele et al. 2014). Used both as a mixer for deriving
// sub-seeds and as the per-sample generator. All randomness in this
// project flows through these routines so that every sample is a pure
// function of (seed, stream, index) on every platform.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent sub-seed from (master, stream id, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    std::uint64_t b = splitmix64(s);
    s = b ^ (index * 0xda942042e4dd58b5ULL + 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

/// Small deterministic generator. Uniform doubles take the top 53 bits;
/// normals come from Box-Muller so the draw sequence is identical across
/// standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. Two uniforms per draw, no caching,
    /// so the draw count per sample is fixed.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        // Guard against log(0).
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::uint64_t state_;
};

/// Generator for sample `index` of stream `stream` under `master`.
inline Rng at(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return Rng(derive_seed(master, stream, index));
}

}  // namespace reason::rng
