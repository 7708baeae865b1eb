#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace surfsim {

using RngStream = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Seed split function. A named stream's seed is
///
///     splitmix64(splitmix64(master ^ fnv1a(name)) + index)
///
/// so that every (name, index) pair draws from an independent generator and
/// adding draws to one stream never shifts another. `index` distinguishes
/// per-node streams of the same kind.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
    return detail::splitmix64(detail::splitmix64(master ^ detail::fnv1a(name)) + index);
}

inline RngStream make_stream(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
    return RngStream{stream_seed(master, name, index)};
}

// Stream names used by the engine.
namespace streams {
inline constexpr std::string_view topology = "topology";
inline constexpr std::string_view pr = "pr";
inline constexpr std::string_view decision = "decision";
inline constexpr std::string_view jitter = "jitter";
inline constexpr std::string_view assignment = "ca-assignment";
inline constexpr std::string_view background = "background";
} // namespace streams

inline std::size_t uniform_index(RngStream& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>{0, n - 1}(rng);
}

// Always consumes exactly one draw, so p = 0 and p = 1 keep the stream aligned.
inline bool bernoulli(RngStream& rng, double p) {
    return std::uniform_real_distribution<double>{0.0, 1.0}(rng) < p;
}

} // namespace surfsim
