#pragma once

#include <cstdint>
#include <random>

namespace sfplr {

// splitmix64 finalizer; good avalanche, used to derive independent
// sub-stream seeds from (master seed, stream tags).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
    return splitmix64(splitmix64(seed) ^ a);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) {
    return derive_seed(derive_seed(seed, a, b), c);
}

// Stream tags. Each (tag, index...) pair owns an independent generator so
// results do not depend on evaluation order or thread scheduling.
namespace stream {
inline constexpr std::uint64_t directions = 0x01;
inline constexpr std::uint64_t bootstrap = 0x02;
inline constexpr std::uint64_t process = 0x03;
inline constexpr std::uint64_t scalars = 0x04;
inline constexpr std::uint64_t noise = 0x05;
inline constexpr std::uint64_t monte_carlo = 0x06;
}  // namespace stream

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace sfplr
