#pragma once

#include <cstdint>
#include <random>

namespace inextensa {

// All randomness flows from one seed; sub-streams are derived by fixed
// offsets so reports are bit-reproducible.  mt19937_64 output is specified
// by the standard, and doubles are built by explicit scaling (the standard
// distributions are not portable across library implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform01() { return (eng_() >> 11) * (1.0 / 9007199254740992.0); }

    // Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Uniform magnitude in [lo, hi) with random sign.
    double signed_uniform(double lo, double hi) {
        double m = uniform(lo, hi);
        return (eng_() & 1u) ? m : -m;
    }

    int uniform_int(int n) { return int(eng_() % std::uint64_t(n)); }

private:
    std::mt19937_64 eng_;
};

inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t op_index) {
    return seed + op_index;
}

} // namespace inextensa
