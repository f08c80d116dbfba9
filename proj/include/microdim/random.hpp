#pragma once

#include <cstdint>
#include <random>

namespace microdim {

/// 64-bit Mersenne Twister with library-defined (stdlib-independent) draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (seed, stream) via a SplitMix64 mix.
    static Rng substream(std::uint64_t seed, std::uint64_t stream) { return Rng(mix(seed ^ mix(stream + 1))); }

    std::uint64_t next() { return engine_(); }

    /// Uniform real in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return lo + static_cast<std::int64_t>(engine_());
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    /// Poisson variate by CDF inversion; large means are split into chunks.
    std::uint64_t poisson(double mean);

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace microdim
