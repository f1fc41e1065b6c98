// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace nsgeo {

/// Counter-based random number generation (Philox4x64-10).
///
/// Every random stream in this library is addressed by four integers:
///
///   key     = { master_seed, purpose }
///   counter = { block_index, replicate_id, scenario_index, 0 }
///
/// A stream emits the four 64-bit words of philox4x64_10(counter, key) in
/// order, then increments block_index.  Streams with distinct
/// (purpose, scenario_index, replicate_id) are distinct by construction, so
/// replicates of a simulation study can run in any order, on any number of
/// threads, and reproduce bit-identical results.
namespace philox {

inline constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

using Counter = std::array<std::uint64_t, 4>;
using Key = std::array<std::uint64_t, 2>;

inline Counter round_once(const Counter& c, const Key& k) {
  const unsigned __int128 p0 = static_cast<unsigned __int128>(kMult0) * c[0];
  const unsigned __int128 p1 = static_cast<unsigned __int128>(kMult1) * c[2];
  const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
  const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
  const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
  const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/// Ten rounds with the Weyl key schedule applied between rounds.
inline Counter block(Counter c, Key k) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    c = round_once(c, k);
  }
  return c;
}

}  // namespace philox

/// Stream purpose tags (the second key word).  Values are arbitrary but
/// frozen: changing them changes every sampled dataset.
namespace stream_purpose {
inline constexpr std::uint64_t kDataset = 0x5D5E0001ULL;
inline constexpr std::uint64_t kFitBase = 0x5D5E1000ULL;  // + fitted-model index
inline constexpr std::uint64_t fit(std::uint64_t model_index) { return kFitBase + model_index; }
}  // namespace stream_purpose

/// One addressed Philox stream with uniform and normal draws layered on top.
///
/// Bit-exact derivations used everywhere in the library:
///   u64        : next word of the stream
///   uniform01  : (u64 >> 11) * 2^-53                 in [0, 1)
///   normal     : Box-Muller on (u1, u2) where
///                u1 = ((a >> 11) + 1) * 2^-53        in (0, 1]
///                u2 = (b >> 11) * 2^-53              in [0, 1)
///                z0 = sqrt(-2 ln u1) cos(2 pi u2)
///                z1 = sqrt(-2 ln u1) sin(2 pi u2)
///                (z1 is cached and returned by the following call)
class RngStream {
public:
  RngStream(std::uint64_t master_seed, std::uint64_t purpose, std::uint64_t scenario_index,
            std::uint64_t replicate_id)
      : key_{master_seed, purpose}, counter_{0, replicate_id, scenario_index, 0} {}

  std::uint64_t u64() {
    if (word_ == 4) {
      buffer_ = philox::block(counter_, key_);
      ++counter_[0];
      word_ = 0;
    }
    return buffer_[word_++];
  }

  double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = (static_cast<double>(u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

private:
  philox::Key key_;
  philox::Counter counter_;
  std::array<std::uint64_t, 4> buffer_{};
  int word_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace nsgeo
