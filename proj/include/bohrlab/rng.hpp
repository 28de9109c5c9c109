#pragma once

#include <cstdint>

namespace bohrlab {

// splitmix64: tiny, fast, and fully specified, so streams are reproducible
// across platforms and standard library versions.  All randomized routines
// in the library draw from this; none use std:: distributions (their output
// is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n) by rejection; exact, no modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t threshold = (0ULL - n) % n; // 2^64 mod n
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Derive an independent stream; handy for giving each subroutine its
    // own deterministic generator regardless of call order.
    Rng fork(std::uint64_t salt) {
        Rng r(state_ ^ (0x6a09e667f3bcc909ULL + salt * 0x9e3779b97f4a7c15ULL));
        r.next_u64();
        return r;
    }

private:
    std::uint64_t state_;
};

} // namespace bohrlab
