#pragma once

#include <cmath>
#include <cstdint>

namespace mfg {

// splitmix64 step (Steele/Lea/Flood constants). Used for seeding and for
// deriving independent per-task seeds, so fan-out order never matters.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// seed_i = mix(seed, i): independent stream seeds for parallel fan-out.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

// xorshift64* generator (shifts 12/25/27, multiplier 2685821657736338717).
// Chosen over std engines so that paths reproduce bit-exactly across
// platforms and compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next_u64() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // uniform in [0,1) with 53 random bits
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0,1], safe to pass to log()
    double next_unit_open() {
        return 1.0 - next_unit();
    }

    // inverse-CDF exponential sample of given rate
    double next_exponential(double rate) {
        return -std::log(next_unit_open()) / rate;
    }

    // standard normal via Box-Muller (not used by solvers; handy in tests)
    double next_normal() {
        double u1 = next_unit_open();
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace mfg
