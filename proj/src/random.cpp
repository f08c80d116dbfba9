#include "microdim/random.hpp"

#include "microdim/error.hpp"

#include <cmath>

namespace microdim {

std::uint64_t Rng::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw ValidationError("poisson mean must be finite and >= 0");
    }
    // sums of independent Poisson variates are Poisson; keep each inversion small
    constexpr double chunk = 500.0;
    std::uint64_t total = 0;
    while (mean > chunk) {
        total += poisson(chunk);
        mean -= chunk;
    }
    // sequential inversion of the CDF
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && p > 0.0) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return total + k;
}

} // namespace microdim
