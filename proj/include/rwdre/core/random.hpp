#pragma once

#include <cmath>
#include <cstdint>

namespace rwdre {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based random stream. Output n is mix64(key + n * gamma), so a
// stream is fully determined by (key, counter) and can be split by tag into
// independent children. Every replica, site and purpose draws from its own
// derived stream; results never depend on scheduling order.
class Stream {
 public:
  using result_type = std::uint64_t;

  constexpr Stream() = default;
  constexpr explicit Stream(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr Stream from_seed(std::uint64_t seed) noexcept {
    return Stream(mix64(seed ^ 0x5851f42d4c957f2dULL));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return mix64(key_ + (++counter_) * kGamma); }

  // Child stream for `tag`; does not advance this stream.
  [[nodiscard]] constexpr Stream split(std::uint64_t tag) const noexcept {
    return Stream(mix64(key_ ^ mix64(tag * kGamma + 0x632be59bd9b4e019ULL)));
  }
  [[nodiscard]] constexpr Stream split(std::uint64_t tag1, std::uint64_t tag2) const noexcept {
    return split(tag1).split(tag2);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(operator()() >> 11) * 0x1.0p-53; }

  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Stream tags for the different consumers of a run seed.
namespace tags {
inline constexpr std::uint64_t environment = 1;
inline constexpr std::uint64_t walker = 2;
inline constexpr std::uint64_t epsilon = 3;
inline constexpr std::uint64_t jump_clock = 4;
inline constexpr std::uint64_t burn_in = 5;
inline constexpr std::uint64_t coupling = 6;
inline constexpr std::uint64_t regen = 7;
inline constexpr std::uint64_t mc_direct = 8;
inline constexpr std::uint64_t initial = 9;
}  // namespace tags

}  // namespace rwdre
