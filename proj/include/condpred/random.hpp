// random.hpp
//
// Counter-based, splittable random number generation.
//
// The block function is Philox4x32-10 (Salmon et al., SC 2011). A
// RandomState is the triple (key, stream, block index): the key comes from
// the user seed, the stream identifies a substream, and the block index
// walks through the counter space. Children created by split() share the
// key and receive a hashed stream id, so streams derived from distinct
// (parent, index) pairs never share counter values except by a 64-bit hash
// collision.
//
// Pinned layout (ports must reproduce it exactly):
//   key words     = { seed & 0xffffffff, seed >> 32 }
//   counter words = { block & 0xffffffff, block >> 32,
//                     stream & 0xffffffff, stream >> 32 }
//   next_u64      = out[2j] | (out[2j+1] << 32), j = 0, 1 per block
//   uniform       = ((next_u64 >> 11) + 0.5) * 2^-53, always in (0, 1)
//   split(i)      = { key, mix64(stream ^ mix64(i + 0x9e3779b97f4a7c15)) }
// where mix64 is the splitmix64 finalizer.

#ifndef CONDPRED_RANDOM_HPP
#define CONDPRED_RANDOM_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace condpred {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr PhiloxCounter philox_round(const PhiloxCounter& ctr, const PhiloxKey& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// Philox4x32 with ten rounds.
constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    ctr = detail::philox_round(ctr, key);
  }
  return ctr;
}

/// splitmix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class RandomState {
 public:
  using result_type = std::uint64_t;

  explicit RandomState(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
    if (used_ == 4) refill();
    const std::uint64_t lo = buffer_[used_];
    const std::uint64_t hi = buffer_[used_ + 1];
    used_ += 2;
    return lo | (hi << 32);
  }

  /// Uniform draw on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Independent child stream; does not advance this state.
  RandomState split(std::uint64_t index) const {
    return RandomState(key_, mix64(stream_ ^ mix64(index + 0x9E3779B97F4A7C15ull)));
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill() {
    const PhiloxCounter ctr = {static_cast<std::uint32_t>(block_),
                               static_cast<std::uint32_t>(block_ >> 32),
                               static_cast<std::uint32_t>(stream_),
                               static_cast<std::uint32_t>(stream_ >> 32)};
    const PhiloxKey key = {static_cast<std::uint32_t>(key_),
                           static_cast<std::uint32_t>(key_ >> 32)};
    buffer_ = philox4x32_10(ctr, key);
    ++block_;
    used_ = 0;
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  unsigned used_ = 4;
};

}  // namespace condpred

#endif  // CONDPRED_RANDOM_HPP
