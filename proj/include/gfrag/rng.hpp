#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace gfrag {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Output block n is a pure function of (key, counter = {n, stream}), so two
/// engines that differ in key or stream never share state and any block can
/// be produced without generating its predecessors.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t key, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (used_ == 2) {
            buffer_ = generate({static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)},
                               key_);
            ++counter_;
            used_ = 0;
        }
        const auto lo = buffer_[2 * used_];
        const auto hi = buffer_[2 * used_ + 1];
        ++used_;
        return (static_cast<std::uint64_t>(hi) << 32) | lo;
    }

    static constexpr Block generate(Block ctr, Key key) noexcept {
        constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }

private:
    Key key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    Block buffer_{};
    int used_ = 2;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Named source of randomness: identical (seed, stream_id) gives identical
/// draws. Replicas take `substream(i)`; independent draw families inside one
/// replica take distinct `engine(lane)`s.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    RngStream substream(std::uint64_t index) const noexcept {
        return {seed, splitmix64(stream_id ^ splitmix64(index + 0x632BE59BD9B4E019ull))};
    }

    Philox4x32 engine(std::uint32_t lane = 0) const noexcept {
        return Philox4x32(splitmix64(seed) ^ (static_cast<std::uint64_t>(lane) * 0xA24BAED4963EE407ull),
                          stream_id);
    }

    friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Uniform on (0, 1], safe for logarithms.
template <class Engine>
double uniform_open0(Engine& eng) {
    return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
}

template <class Engine>
double standard_exponential(Engine& eng) {
    return -std::log(uniform_open0(eng));
}

}  // namespace gfrag
