// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace glint {

// Stateless 64-bit mixer (splitmix64 finalizer). Good avalanche; the basis
// of the counter-based streams below.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2)));
}

// Counter-based random stream: the variate at (seed, stream, index) is a pure
// function of the triple. Streams are indexable, so perturbed re-evaluations
// can share identical random numbers.
class RngStream {
  public:
    RngStream() = default;
    RngStream(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

    uint64_t next_u64() { return value_at(index_++); }

    // Uniform in [0,1) with 53 random mantissa bits.
    double next_uniform() { return to_unit(next_u64()); }

    // Random access without advancing the cursor.
    double uniform_at(uint64_t index) const { return to_unit(value_at(index)); }

    void seek(uint64_t index) { index_ = index; }
    uint64_t index() const { return index_; }
    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

  private:
    static double to_unit(uint64_t bits) {
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    uint64_t value_at(uint64_t index) const {
        uint64_t h = mix64(seed_ ^ 0x8BADF00D5DEECE66ull);
        h = hash_combine(h, stream_);
        h = hash_combine(h, index);
        return h;
    }

    uint64_t seed_ = 0;
    uint64_t stream_ = 0;
    uint64_t index_ = 0;
};

}  // namespace glint
