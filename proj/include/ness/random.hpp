#pragma once

// Counter-based random streams (Philox4x64-10).
//
// A stream is addressed by (master, stream); the n-th 256-bit block of a
// stream is a pure function of (master, stream, n), so any replica can be
// regenerated without replaying its predecessors.

#include <array>
#include <cstdint>
#include <limits>

namespace ness {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static Counter round(const Counter& c, const Key& k) noexcept {
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * c[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
    const auto lo0 = static_cast<std::uint64_t>(p0);
    const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
    const auto lo1 = static_cast<std::uint64_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  static Counter apply(Counter c, Key k) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      c = round(c, k);
    }
    return c;
  }
};

}  // namespace detail

/// Identifies a reproducible substream.
struct RandomSeed {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  /// Derived substream for sub-task `index` (replica, ladder point, ...).
  RandomSeed child(std::uint64_t index) const noexcept {
    return {master, detail::splitmix64(stream ^ detail::splitmix64(index + 0x632BE59BD9B4E019ULL))};
  }

  friend bool operator==(const RandomSeed&, const RandomSeed&) = default;
};

/// Uniform random bit generator over one Philox substream.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(RandomSeed seed) noexcept : key_{seed.master, 0}, stream_(seed.stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() noexcept {
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>((*this)() >> 11) + 0.5) * kScale;
  }

 private:
  void refill() noexcept {
    buffer_ = detail::Philox4x64::apply({block_++, 0, stream_, 0}, key_);
    used_ = 0;
  }

  detail::Philox4x64::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace ness
