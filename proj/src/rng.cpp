#include "gallat/rng.hpp"

#include <cmath>
#include <sstream>

#include "gallat/errors.hpp"

namespace gallat {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw ContractError("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

long Rng::poisson(double lambda) {
    if (lambda < 0.0) throw ContractError("Rng::poisson: lambda must be >= 0");
    if (lambda == 0.0) return 0;
    // Split large rates to keep exp(-lambda) away from underflow.
    long k = 0;
    double remaining = lambda;
    while (remaining > 500.0) {
        const double chunk = 500.0;
        const double l = std::exp(-chunk);
        double p = 1.0;
        long kk = -1;
        do {
            ++kk;
            p *= uniform();
        } while (p > l);
        k += kk;
        remaining -= chunk;
    }
    const double l = std::exp(-remaining);
    double p = 1.0;
    long kk = -1;
    do {
        ++kk;
        p *= uniform();
    } while (p > l);
    return k + kk;
}

std::string Rng::save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::load_state(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
    if (is.fail()) throw FormatError("Rng: bad engine state string");
}

} // namespace gallat
