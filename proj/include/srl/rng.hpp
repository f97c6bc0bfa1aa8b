#pragma once

#include <cstdint>

namespace srl {

// splitmix64 mixing function. Public so file formats / tests can reuse it.
constexpr uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic counter-based generator (splitmix64 core).
//
// fork(key) derives an independent sub-stream from the *construction seed*
// and the key, without touching this generator's state. Consumers that need
// reproducibility independent of consumption order (per-episode streams,
// per-worker streams) should fork with a stable key rather than share one
// generator.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, n), n > 0. Unbiased via rejection.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Gaussian(0, 1) via Box-Muller (one value per call; no cached spare, so
    // the stream stays a pure function of the draw count).
    double next_gaussian();

    // Keyed sub-stream derivation; see class comment.
    Rng fork(uint64_t key) const {
        return Rng(mix64(seed_ ^ mix64(key + 0xD1B54A32D192ED03ULL)));
    }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t state_;
};

}  // namespace srl
