#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace carlevel {

/// xoshiro256++ seeded through SplitMix64. Stream k is the base sequence
/// advanced by k jumps of 2^128 draws, so (seed, stream_id) pairs map to
/// non-overlapping subsequences and are reproducible bit for bit.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on the open interval (0, 1).
    double uniform01();

    /// Advance by 2^128 draws.
    void jump();

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

/// SplitMix64 finaliser, used to derive child seeds from structured keys.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

}  // namespace carlevel
