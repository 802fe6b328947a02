#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vton {

// Seeded RNG with hand-rolled float transforms. std::mt19937 output is fixed
// by the standard; the distributions are not, so uniform/normal are built here
// to keep every artifact reproducible bit-for-bit across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(mix(seed)) {}

    uint32_t next_u32() { return gen_(); }

    // uniform in [0, 1)
    float uniform() { return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f); }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        uint32_t span = static_cast<uint32_t>(hi - lo + 1);
        return lo + static_cast<int>(next_u32() % span);
    }

    // standard normal, Box-Muller with cached spare
    float normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        float u1 = 0.0f;
        do {
            u1 = uniform();
        } while (u1 <= 0.0f);
        float u2 = uniform();
        float r = std::sqrt(-2.0f * std::log(u1));
        float a = 6.28318530717958647692f * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    static uint32_t mix(uint64_t seed) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return static_cast<uint32_t>(z ^ (z >> 32));
    }

    std::mt19937 gen_;
    float spare_ = 0.0f;
    bool has_spare_ = false;
};

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 12) + (a >> 4));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace vton
