#pragma once

#include <cstdint>
#include <random>

namespace bgnn {

/// Deterministic random source. Wraps std::mt19937_64 but generates
/// uniform/normal variates with explicit formulas so that a given seed
/// produces the same stream on every standard-conforming toolchain
/// (std::normal_distribution is implementation-defined; Box-Muller is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on {lo, ..., hi} inclusive.
    int uniform_int(int lo, int hi) {
        // rejection-free modulo bias is irrelevant at these ranges, but keep it exact
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

    /// Standard normal via Box-Muller (uses both variates).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Independent stream derived from a master seed and a stream index.
    /// Uses splitmix64 so streams with adjacent indices are uncorrelated.
    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (stream_index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        return Rng(z);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace bgnn
