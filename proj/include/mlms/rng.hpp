#pragma once

#include <array>
#include <cstdint>

namespace mlms {

/// Philox4x64-10 block function (Salmon et al., Random123). Counter-based:
/// the output is a pure function of (counter, key), so any draw can be
/// reproduced without replaying the stream.
struct Philox4x64 {
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept;
};

/// SplitMix64 finalizer; used to derive keys from (seed, stream) pairs.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Integer seed for item `index` of a run seeded with `seed` (trials, scenes).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// Stream of pseudo-random draws backed by Philox4x64-10.
///
/// Stream splitting: the key of `Rng(seed, stream)` is
/// `{mix64(seed), mix64(stream ^ 0x9E3779B97F4A7C15)}` and the counter starts
/// at zero, so `Rng(seed, i)` for distinct `i` are independent substreams.
/// `split(i)` derives a child stream from this stream's (seed, stream) pair,
/// which is how per-trial generators are created: results never depend on
/// which thread ran which trial.
///
/// Draw methods:
///  - `uniform()`  : top 53 bits of one 64-bit word, times 2^-53, in [0, 1).
///  - `normal()`   : Box-Muller on two words. u1 = (w1 >> 11 + 1) 2^-53 in (0, 1],
///                   u2 = (w2 >> 11) 2^-53; returns r cos(2 pi u2) and caches
///                   r sin(2 pi u2) for the next call, r = sqrt(-2 ln u1).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint64_t next_u64() noexcept;
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double normal() noexcept;
    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) noexcept;

    Rng split(std::uint64_t index) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    Philox4x64::Key key_;
    Philox4x64::Counter ctr_{};
    Philox4x64::Counter buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mlms
