#pragma once

#include <cstdint>
#include <random>

namespace dcortest {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// A reproducible random stream keyed by (seed, stream_index).
///
/// Streams with different keys are seeded through a SplitMix64 mix of both
/// halves, so neighbouring replication indices do not produce correlated
/// Mersenne Twister states. `derive` builds child streams for sub-tasks
/// (data generation, permutations) of one replication.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    RngStream(std::uint64_t seed, std::uint64_t stream_index = 0)
        : seed_(seed), stream_index_(stream_index), engine_(mixed_seed(seed, stream_index)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    engine_type& engine() noexcept { return engine_; }

    /// Child stream keyed by `key`; does not consume state from this stream.
    RngStream derive(std::uint64_t key) const {
        return RngStream(detail::splitmix64(mixed_seed(seed_, stream_index_) ^ detail::splitmix64(key)),
                         key);
    }

private:
    static std::uint64_t mixed_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
        return detail::splitmix64(detail::splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
    }

    std::uint64_t seed_;
    std::uint64_t stream_index_;
    engine_type engine_;
};

}  // namespace dcortest
