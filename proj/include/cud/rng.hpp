#pragma once

#include <cmath>
#include <cstdint>

namespace cud {

// splitmix64 finalizer; also used to derive child seeds from a root seed.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed splitting rule: child = mix64(root ^ mix64(stream ^ mix64(index))).
// Every worker derives its own seed this way, so no generator state is shared.
inline uint64_t derive_seed(uint64_t root, uint64_t stream, uint64_t index = 0) {
    return mix64(root ^ mix64(stream ^ mix64(index)));
}

// Stream tags for derive_seed. Arbitrary distinct constants.
namespace streams {
constexpr uint64_t replicate = 0x626f6f7473ULL;   // bootstrap replicates
constexpr uint64_t repetition = 0x726570ULL;      // Monte-Carlo repetitions
constexpr uint64_t train = 0x747261696eULL;
constexpr uint64_t truth = 0x7472757468ULL;
constexpr uint64_t split = 0x73706c6974ULL;
constexpr uint64_t method = 0x6d657468ULL;
constexpr uint64_t estimate632 = 0x363332ULL;
}  // namespace streams

// Deterministic 64-bit generator (splitmix64). We avoid <random> distributions
// because their output is implementation-defined; every draw here is
// bit-reproducible for a given seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log() argument.
    double next_double_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound). Modulo bias is < bound / 2^64, which is
    // far below anything our statistical tests can resolve.
    uint64_t next_below(uint64_t bound) { return next_u64() % bound; }

    // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double next_normal() {
        const double u1 = next_double_pos();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Chi-square with integer degrees of freedom as a sum of squared normals.
    double next_chi_square(int df) {
        double s = 0.0;
        for (int i = 0; i < df; ++i) {
            const double z = next_normal();
            s += z * z;
        }
        return s;
    }

private:
    uint64_t state_;
};

}  // namespace cud
