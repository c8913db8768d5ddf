#pragma once

#include <cstdint>
#include <random>

namespace sonobox {

// 64-bit mix used to derive per-episode seeds from (master, index) pairs.
// splitmix64 finalizer; stable across platforms.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_seed(uint64_t master, uint64_t index) {
    return mix64(master ^ mix64(index + 1));
}

inline uint64_t hash_seed(uint64_t master, uint64_t index, uint64_t attempt) {
    return mix64(hash_seed(master, index) ^ mix64(attempt + 0x51ed2701ULL));
}

// Deterministic RNG. mt19937_64 output is pinned by the standard; the
// uniform/normal transforms below avoid std::*_distribution, whose streams
// are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t bits() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n). Lemire multiply-shift, no rejection bias at
    // the magnitudes used here (n far below 2^32).
    uint64_t integer(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(eng_()) * n) >> 64);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sonobox
