// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0

#include "nsgeo/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace nsgeo {
namespace {

// Known-answer vectors for the counter-based generator, frozen from an
// independent reference implementation of the same algorithm.
TEST(Philox, KnownAnswerSeedOne) {
  const philox::Counter counter{1, 0, 0, 0};
  const philox::Key key{0, 0};
  const auto out = philox::block(counter, key);
  EXPECT_EQ(out[0], 0x02f4ba6408e4d89bULL);
  EXPECT_EQ(out[1], 0x3dd62b0b9ca8c5b2ULL);
  EXPECT_EQ(out[2], 0x1c8667a55d902e79ULL);
  EXPECT_EQ(out[3], 0x907d7a052fd5b4dcULL);
}

TEST(Philox, KnownAnswerSeedTwo) {
  const philox::Counter counter{2, 0, 0, 0};
  const philox::Key key{0, 0};
  const auto out = philox::block(counter, key);
  EXPECT_EQ(out[0], 0x809bf322883987c3ULL);
  EXPECT_EQ(out[1], 0x471128b9e807f7ddULL);
  EXPECT_EQ(out[2], 0xf250ba0dbec065b7ULL);
  EXPECT_EQ(out[3], 0xfc6ed66767a457bcULL);
}

TEST(Philox, KnownAnswerNonzeroKey) {
  const philox::Counter counter{1, 0, 0, 0};
  const philox::Key key{0xdeadbeefULL, 0};
  const auto out = philox::block(counter, key);
  EXPECT_EQ(out[0], 0xa4e930dc738acaf1ULL);
  EXPECT_EQ(out[1], 0xb1c7ecc6484e9cf0ULL);
  EXPECT_EQ(out[2], 0x6b88a411909298aaULL);
  EXPECT_EQ(out[3], 0x66f3c896201f7262ULL);
}

TEST(Philox, KnownAnswerAddressedStream) {
  // Counter laid out as RngStream does: {block, replicate, scenario, 0}
  // with key {master_seed, purpose}.
  const philox::Counter counter{1, 7, 2, 0};
  const philox::Key key{20250815ULL, 0x5d5e0001ULL};
  const auto out = philox::block(counter, key);
  EXPECT_EQ(out[0], 0x0017ac639808778cULL);
  EXPECT_EQ(out[1], 0x04c8840b4efed741ULL);
  EXPECT_EQ(out[2], 0x40e9f23ad6bafba1ULL);
  EXPECT_EQ(out[3], 0x8da1551886925f87ULL);
}

TEST(RngStream, FirstWordsComeFromBlockZero) {
  RngStream stream(20250815, stream_purpose::kDataset, 2, 7);
  const auto block0 = philox::block({0, 7, 2, 0}, {20250815ULL, 0x5d5e0001ULL});
  const auto block1 = philox::block({1, 7, 2, 0}, {20250815ULL, 0x5d5e0001ULL});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(stream.u64(), block0[static_cast<std::size_t>(i)]);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(stream.u64(), block1[static_cast<std::size_t>(i)]);
}

TEST(RngStream, SameAddressSameSequence) {
  RngStream a(42, stream_purpose::kDataset, 0, 3);
  RngStream b(42, stream_purpose::kDataset, 0, 3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.u64(), b.u64());
}

TEST(RngStream, DifferentAddressesDisagree) {
  RngStream base(42, stream_purpose::kDataset, 0, 3);
  RngStream other_seed(43, stream_purpose::kDataset, 0, 3);
  RngStream other_purpose(42, stream_purpose::fit(0), 0, 3);
  RngStream other_scenario(42, stream_purpose::kDataset, 1, 3);
  RngStream other_replicate(42, stream_purpose::kDataset, 0, 4);
  const std::uint64_t word = base.u64();
  EXPECT_NE(word, other_seed.u64());
  EXPECT_NE(word, other_purpose.u64());
  EXPECT_NE(word, other_scenario.u64());
  EXPECT_NE(word, other_replicate.u64());
}

TEST(RngStream, Uniform01IsWordTimesTwoToMinus53) {
  RngStream values(9, 0, 0, 0);
  RngStream words(9, 0, 0, 0);
  for (int i = 0; i < 100; ++i) {
    const double expected = static_cast<double>(words.u64() >> 11) * 0x1.0p-53;
    EXPECT_EQ(values.uniform01(), expected);
  }
}

TEST(RngStream, UniformRangeRespectsBounds) {
  RngStream stream(7, 0, 0, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = stream.uniform(-1.0, 1.0);
    EXPECT_GE(u, -1.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(RngStream, NormalConsumesTwoWordsPerPair) {
  RngStream values(11, 0, 0, 0);
  RngStream words(11, 0, 0, 0);
  const double z0 = values.normal();
  const double z1 = values.normal();
  const double u1 = (static_cast<double>(words.u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(words.u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  EXPECT_EQ(z0, r * std::cos(2.0 * M_PI * u2));
  EXPECT_EQ(z1, r * std::sin(2.0 * M_PI * u2));
  // Third draw starts a fresh pair rather than reusing stale state.
  const double z2 = values.normal();
  const double v1 = (static_cast<double>(words.u64() >> 11) + 1.0) * 0x1.0p-53;
  const double v2 = static_cast<double>(words.u64() >> 11) * 0x1.0p-53;
  EXPECT_EQ(z2, std::sqrt(-2.0 * std::log(v1)) * std::cos(2.0 * M_PI * v2));
}

TEST(RngStream, NormalMomentsLookStandard) {
  RngStream stream(123, 0, 0, 0);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = stream.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  // 4-sigma bands for the Monte-Carlo error of each moment.
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST(RngStream, UniformMomentsLookStandard) {
  RngStream stream(321, 0, 0, 0);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += stream.uniform01();
  // sd of the mean of Unif[0,1) draws is 1/sqrt(12 n).
  EXPECT_NEAR(sum / n, 0.5, 4.0 / std::sqrt(12.0 * n));
}

}  // namespace
}  // namespace nsgeo
