#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gallat {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// mt19937_64 wrapped with hand-rolled distributions. The standard
/// distribution classes are implementation-defined, which would make
/// checkpoints and fixtures differ across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) by rejection; n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Knuth's product-of-uniforms sampler; fine for the small rates
    /// this project generates (cost grows linearly with lambda).
    long poisson(double lambda);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::string save_state() const;
    void load_state(const std::string& text);

private:
    std::mt19937_64 engine_;
};

} // namespace gallat
