#pragma once

#include <cstdint>
#include <string_view>

#include "forge/hash.hpp"

namespace forge::rng {

// sm64ctr-v1: counter-based generator. Draw i of stream s under seed k is
//
//   value(k, s, i) = mix64(mix64(k ^ mix64(s)) + 0x9e3779b97f4a7c15 * i)
//
// i.e. the SplitMix64 sequence whose initial state is derived from (seed,
// stream). Every draw is a pure function of its coordinates: stages can pull
// from disjoint streams in any order, across any thread count, and replays
// are bit-identical on every platform.
inline constexpr std::string_view kAlgorithm = "sm64ctr-v1";

constexpr std::uint64_t stream_base(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

constexpr std::uint64_t value(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return mix64(stream_base(seed, stream) + 0x9e3779b97f4a7c15ULL * counter);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t v) {
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Multiply-shift reduction; the bias of n / 2^64
// is far below anything observable here.
constexpr std::uint64_t to_below(std::uint64_t v, std::uint64_t n) {
  using u128 = unsigned __int128;
  return static_cast<std::uint64_t>((static_cast<u128>(v) * n) >> 64);
}

// Sequential view of one stream.
class Counter {
 public:
  Counter(std::uint64_t seed, std::uint64_t stream) : base_(stream_base(seed, stream)) {}

  std::uint64_t next_u64() { return mix64(base_ + 0x9e3779b97f4a7c15ULL * counter_++); }
  double next_unit() { return to_unit(next_u64()); }
  std::uint64_t next_below(std::uint64_t n) { return to_below(next_u64(), n); }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

inline std::uint64_t stream_of(std::string_view name) { return fnv1a64(name); }

}  // namespace forge::rng
