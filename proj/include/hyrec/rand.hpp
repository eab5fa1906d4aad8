#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hyrec::rng {

// All randomness flows through mt19937_64 plus the two draw helpers below.
// std::uniform_*_distribution is avoided on purpose: its output is not
// specified bit-for-bit across standard libraries, and reproducibility of
// whole runs (including checkpoint/resume) requires stable draws.
using Engine = std::mt19937_64;

/// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n). Rejection sampling keeps the result unbiased.
/// Precondition: n > 0.
inline std::size_t uniform_index(Engine& eng, std::size_t n) {
    const auto span = static_cast<std::uint64_t>(n);
    const std::uint64_t reject_below = (0 - span) % span;  // 2^64 mod n
    std::uint64_t draw = eng();
    while (draw < reject_below) draw = eng();
    return static_cast<std::size_t>(draw % span);
}

/// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a role tag, so
/// that e.g. the environment and each agent get unrelated sequences.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = mix(base);
    for (char c : tag) h = mix(h ^ static_cast<std::uint8_t>(c));
    return h;
}

}  // namespace hyrec::rng
