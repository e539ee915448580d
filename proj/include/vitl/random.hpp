#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vitl {

/// Counter-based seed derivation. Every random stream in the library is keyed by
/// (root seed, path of integer counters), so a sub-experiment draws the same
/// numbers regardless of the order in which siblings are executed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = splitmix64(root);
    for (const auto counter : path) {
        state = splitmix64(state ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
    }
    return state;
}

inline std::mt19937_64 make_engine(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    return std::mt19937_64(derive_seed(root, path));
}

// Stream tags, so that e.g. split k and mask k never share a stream.
namespace stream {
inline constexpr std::uint64_t kMask = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kFold = 3;
inline constexpr std::uint64_t kSynthetic = 4;
inline constexpr std::uint64_t kNoise = 5;
inline constexpr std::uint64_t kSweepMask = 6;
}  // namespace stream

}  // namespace vitl
