#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dvfs {

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a64(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent named stream ("dataset", "split", "model",
/// "workload", ...) derived from one master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name) {
    return splitmix64(master ^ fnv1a64(name));
}

inline Rng make_rng(std::uint64_t master, std::string_view name) {
    return Rng(substream_seed(master, name));
}

}  // namespace dvfs
