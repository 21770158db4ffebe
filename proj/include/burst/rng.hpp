#pragma once

#include <cstdint>

namespace burst {

// Counter-based random stream. Each draw hashes (key, counter) with the
// splitmix64 finalizer, so streams keyed by (seed, frame, pixel) are
// independent and insensitive to evaluation order.
class RngStream {
public:
    explicit RngStream(uint64_t key) : key_(key) {}

    // Derive a substream key; mix keeps distinct (a,b) pairs distinct.
    static uint64_t derive(uint64_t parent, uint64_t child);

    uint64_t next_u64();
    // Uniform in [0,1) with 53 random bits.
    double next_double();
    // Uniform in (0,1] -- safe as a log() argument.
    double next_open_double();
    // Standard normal via Box-Muller (consumes two uniforms per pair).
    double next_normal();
    // Exact Poisson sample: inversion for small mean, PTRS rejection above.
    int64_t next_poisson(double mean);

private:
    uint64_t key_;
    uint64_t counter_ = 0;
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace burst
