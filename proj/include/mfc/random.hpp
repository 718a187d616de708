#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace mfc {

// SplitMix64: tiny counter-style generator. Used where a fresh stream is
// needed per work unit (one per Mantel permutation, one per run) so that
// results do not depend on how work is scheduled.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    SplitMix64 g(x);
    return g();
}

// Combine a seed with any number of integer keys into a new, well-mixed seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t k : keys) {
        h = mix64(h ^ mix64(k + 0x3c6ef372fe94f82bULL));
    }
    return h;
}

constexpr std::uint64_t string_key(std::string_view s) noexcept {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Uniform integer in [0, bound). Portable across standard libraries, unlike
// std::uniform_int_distribution. Lemire's multiply-shift with rejection.
template <class Gen>
std::uint64_t uniform_below(Gen& gen, std::uint64_t bound) {
    if (bound <= 1) {
        return 0;
    }
    unsigned __int128 m = static_cast<unsigned __int128>(gen()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(gen()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

// Uniform integer in [lo, hi].
template <class Gen>
std::int64_t uniform_int(Gen& gen, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(uniform_below(gen, static_cast<std::uint64_t>(hi - lo) + 1));
}

template <class T, class Gen>
void shuffle(std::span<T> values, Gen& gen) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(gen, i));
        using std::swap;
        swap(values[i - 1], values[j]);
    }
}

} // namespace mfc
