#pragma once

#include <cstdint>
#include <limits>

namespace eespec {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ mix64(v + kGoldenGamma));
}

// Counter-based uniform stream. Draw number c of a stream with seed s is
// mix64(s + (c + 1) * golden), so any (seed, counter) pair replays exactly and
// streams derived with split() are independent of each other's consumption.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(seed_ + counter_ * kGoldenGamma);
  }

  // Uniform on (0, 1] with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound) by multiply-shift on the top 32 bits.
  constexpr std::uint32_t below(std::uint32_t bound) noexcept {
    return static_cast<std::uint32_t>(((next_u64() >> 32) * bound) >> 32);
  }

  // Child stream keyed by `stream_id`; does not advance this stream.
  constexpr RngStream split(std::uint64_t stream_id) const noexcept {
    return RngStream(hash_combine(mix64(seed_ ^ 0x5851f42d4c957f2dULL), stream_id));
  }

  // UniformRandomBitGenerator interface.
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  constexpr result_type operator()() noexcept { return next_u64(); }

  friend constexpr bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

// Stream ids used to derive independent streams from one top-level seed.
namespace streams {
inline constexpr std::uint64_t kDraft = 1;
inline constexpr std::uint64_t kVerify = 2;
inline constexpr std::uint64_t kTarget = 3;
inline constexpr std::uint64_t kPrompt = 4;
}  // namespace streams

}  // namespace eespec
