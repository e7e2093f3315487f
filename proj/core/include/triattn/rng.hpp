#pragma once

#include <cstdint>

namespace triattn {

// Keyed splitmix64: a counter-based generator. Every draw is a pure function
// of (seed, stream key, counter), so traces are reproducible across
// languages and independent of generation order. The generator name
// "keyed-splitmix64" is recorded in trace provenance sidecars.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t keyed_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                std::uint64_t c, std::uint64_t d) {
    std::uint64_t x = splitmix64(seed);
    x = splitmix64(x ^ a);
    x = splitmix64(x ^ b);
    x = splitmix64(x ^ c);
    x = splitmix64(x ^ d);
    return x;
}

// uniform in [0, 1), 53-bit mantissa
inline double to_unit(std::uint64_t bits) {
    return double(bits >> 11) * 0x1.0p-53;
}

// Sequential stream for consumers that just need a deterministic sequence.
class SplitMixStream {
  public:
    explicit SplitMixStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double uniform() { return to_unit(next()); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next() % n; }

  private:
    std::uint64_t state_;
};

} // namespace triattn
