#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace agl {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from (base, tag, index) so that every
// random consumer (init, mini-batch shuffles, probes, ...) is pinned to an
// explicit, replayable stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(base);
    for (char c : tag) {
        h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    }
    return splitmix64(h ^ index);
}

}  // namespace agl
