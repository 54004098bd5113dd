#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace clifford {

// mt19937_64 with hand-rolled uniform/normal draws. The standard
// distributions are implementation-defined, which would break the
// fixed-seed reproducibility contract across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Derives an independent stream, e.g. one per trajectory index.
    static Rng derived(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix64(seed + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    std::uint64_t bits() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::int64_t uniform_int(std::int64_t n) {  // [0, n)
        return static_cast<std::int64_t>(gen_() % static_cast<std::uint64_t>(n));
    }

    double normal() {
        // Box-Muller; one draw per call keeps the stream position predictable.
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace clifford
