#pragma once

#include <cstdint>

namespace teralasso {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for an independent sub-stream, e.g. (experiment seed, trial index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + mix64(index + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based generator: the i-th draw is mix64(key + (i + 1) * golden), so a
/// stream is fully determined by its key and any position can be reproduced.
///
/// Normal variates use the Box-Muller transform on consecutive uniform pairs
/// (u1, u2): z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2).
/// Uniforms are (top 53 bits + 0.5) * 2^-53, strictly inside (0, 1).
class CounterRng
{
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, bound); bound > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;
    double normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace teralasso
