#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace boxseg {

// Deterministic RNG with hand-rolled value conversions. std:: distributions
// are implementation-defined, so sequences generated here stay bit-identical
// across standard libraries and platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    uint64_t next_u64() {
        // xorshift64* keeps the state a single word, which makes checkpointing trivial.
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0,1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    bool coin() { return (next_u64() & 1ULL) != 0; }

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) { state_ = s; have_spare_ = false; }

    // Stable stream derivation: child generators for (seed, index) pairs never
    // collide with the parent stream.
    static uint64_t derive(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
        uint64_t h = splitmix(seed + 0x9e3779b97f4a7c15ULL);
        h = splitmix(h ^ (a + 0xbf58476d1ce4e5b9ULL));
        h = splitmix(h ^ (b + 0x94d049bb133111ebULL));
        h = splitmix(h ^ (c + 0xd6e8feb86659fd93ULL));
        return h;
    }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace boxseg
