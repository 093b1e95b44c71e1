#pragma once

#include <cstdint>
#include <limits>

namespace qswitch {

/*
 * Random streams.
 *
 * Every random draw in a simulation comes from a SplitMix64 generator whose
 * state is derived from a small tuple of integers:
 *
 *     replication seed = base_seed + replication index
 *     key(replication seed, purpose)   -> stream key
 *     key(stream key, slot)            -> per-slot generator state
 *
 * Purposes are fixed small integers (see StreamPurpose). Since a slot's draws
 * depend only on (replication seed, purpose, slot), arrivals are identical
 * across policies for the same seed (common random numbers), and traces do not
 * shift when unrelated code starts consuming more draws elsewhere.
 *
 * Distributions are implemented here rather than taken from <random>, whose
 * distribution algorithms are implementation-defined and would break
 * cross-platform bit reproducibility.
 */

enum class StreamPurpose : std::uint64_t {
    arrivals = 1,
    lle = 2,
    policy = 3,
};

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive combination of two words into a well-mixed key.
inline constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t child) noexcept {
    return splitmix64_mix(splitmix64_mix(parent + 0x9e3779b97f4a7c15ULL) ^ (child * 0xd6e8feb86659fd93ULL));
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64_mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// True with probability p (p outside [0,1] saturates).
    constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t x = (*this)();
            if (x >= threshold) {
                return x % bound;
            }
        }
    }

private:
    std::uint64_t state_;
};

/// Per-(seed, purpose) stream; hands out one generator per slot.
class SlotStream {
public:
    constexpr SlotStream(std::uint64_t seed, StreamPurpose purpose) noexcept
        : key_(derive_key(seed, static_cast<std::uint64_t>(purpose))) {}

    constexpr SplitMix64 at(std::uint64_t slot) const noexcept { return SplitMix64(derive_key(key_, slot)); }

    constexpr std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
};

}  // namespace qswitch
