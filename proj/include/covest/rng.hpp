#pragma once

#include <cstdint>
#include <random>

namespace covest {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based stream: every (seed, stream, substream) owns its own
/// engine, so parallel and serial replication loops draw identical values.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t substream = 0) {
    return std::mt19937_64(splitmix64(splitmix64(seed ^ 0x5bf03635d1a4f8e6ULL) ^
                                      splitmix64(stream * 0x9e3779b97f4a7c15ULL + substream)));
}

}  // namespace covest
