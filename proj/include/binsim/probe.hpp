#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

// Deterministic, splittable probe source. Streams are pure functions of
// (seed, stream_id): the same pair always yields the same probe sequence,
// on any platform and regardless of what other streams exist, so trials can
// fan out across threads without changing results.

namespace binsim {

namespace detail {

inline std::uint64_t splitmix_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
    return splitmix_next(x);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ with the state filled from a splitmix64 chain keyed by
// (seed, stream_id). 256 bits of state; period 2^256 - 1.
class ProbeStream {
  public:
    ProbeStream() : ProbeStream(0, 0) {}

    ProbeStream(std::uint64_t seed, std::uint64_t stream_id) {
        // Both inputs pass through the avalanche mix before they meet, so
        // nearby seeds or consecutive stream ids do not produce nearby or
        // overlapping state fills.
        std::uint64_t key =
            detail::mix64(seed) ^ detail::mix64(stream_id + 0x632BE59BD9B4E019ull);
        for (auto& word : state_) word = detail::splitmix_next(key);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0)
            state_[0] = 0x9E3779B97F4A7C15ull;  // all-zero state is absorbing
    }

    std::uint64_t next_u64() {
        const std::uint64_t result =
            detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform draw from [0, bound) without modulo bias: multiply-shift with
    // rejection of the short low fringe.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
        unsigned __int128 prod = static_cast<unsigned __int128>(next_u64()) * bound;
        std::uint64_t low = static_cast<std::uint64_t>(prod);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                prod = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(prod);
            }
        }
        return static_cast<std::uint64_t>(prod >> 64);
    }

  private:
    std::array<std::uint64_t, 4> state_{};
};

// Pure: no hidden global state, safe to call concurrently.
inline ProbeStream substream(std::uint64_t seed, std::uint64_t stream_id) {
    return ProbeStream(seed, stream_id);
}

}  // namespace binsim
