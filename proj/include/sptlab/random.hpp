#pragma once

#include <cstdint>
#include <vector>

#include "sptlab/normal.hpp"

namespace sptlab {

/// Counter-based 64-bit generator.
///
/// Output i of a stream with key K is `mix(K + (i + 1) * 0x9E3779B97F4A7C15)`,
/// where `mix` is the SplitMix64 finalizer:
///
///     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///     z =  z ^ (z >> 31)
///
/// This is exactly the SplitMix64 sequence seeded with K, written so that any
/// position is addressable without replaying the stream. Streams are keyed by
/// `stream_key(seed, stream_id)`. Uniforms are `((u >> 11) + 0.5) * 2^-53`, which
/// lies strictly inside (0,1); normals are drawn one uniform at a time through
/// standard_normal_quantile (inverse-CDF), so a reimplementation in another
/// language reproduces draws bit-for-bit given the same Phi^-1.
class CounterRng {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) noexcept {
        return mix(mix(seed + kGamma) ^ (stream_id * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
    }

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
        : key_(stream_key(seed, stream_id)) {}

    [[nodiscard]] std::uint64_t at(std::uint64_t index) const noexcept {
        return mix(key_ + (index + 1) * kGamma);
    }

    std::uint64_t next_u64() noexcept { return at(counter_++); }

    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(double mean = 0.0, double variance = 1.0) noexcept {
        return mean + std::sqrt(variance) * standard_normal_quantile(uniform());
    }

    /// Uniform integer in [0, bound) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace sptlab
