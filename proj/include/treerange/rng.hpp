#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is identified by a 64-bit key (the master seed) and a 64-bit
// stream id; the remaining 64 bits of the Philox counter index blocks within
// the stream. Streams for different ids are independent for all practical
// purposes, so a trial's randomness depends only on (seed, trial id) and never
// on which worker ran it.

#include <array>
#include <cstdint>
#include <limits>

namespace treerange {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) noexcept {
  constexpr std::uint32_t kMulA = 0xD2511F53U;
  constexpr std::uint32_t kMulB = 0xCD9E8D57U;
  constexpr std::uint32_t kWeylA = 0x9E3779B9U;
  constexpr std::uint32_t kWeylB = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

}  // namespace detail

/// Philox4x32-10 stream. Satisfies UniformRandomBitGenerator with 64-bit
/// output, so it plugs into <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_id_(stream_id) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by multiply-shift; bias is below 2^-64 * bound.
  std::uint64_t below(std::uint64_t bound) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * bound) >> 64);
  }

  /// Child stream for a sub-task; depends only on (seed, id, tag).
  [[nodiscard]] Stream substream(std::uint64_t tag) const noexcept {
    const std::uint64_t seed = std::uint64_t{key_[0]} | (std::uint64_t{key_[1]} << 32);
    return Stream(seed, detail::splitmix64(stream_id_ ^ detail::splitmix64(tag + 0x632BE59BD9B4E019ULL)));
  }

  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill() noexcept {
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                           static_cast<std::uint32_t>(stream_id_),
                                           static_cast<std::uint32_t>(stream_id_ >> 32)};
    const auto out = detail::philox4x32_10(ctr, key_);
    buffer_[0] = std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32);
    buffer_[1] = std::uint64_t{out[2]} | (std::uint64_t{out[3]} << 32);
    ++block_;
    cursor_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int cursor_ = 2;
};

/// Stream for trial `trial` of an experiment tagged `experiment` under `seed`.
inline Stream trial_stream(std::uint64_t seed, std::uint64_t experiment, std::uint64_t trial) noexcept {
  return Stream(seed, detail::splitmix64(experiment) ^ trial).substream(experiment);
}

}  // namespace treerange
