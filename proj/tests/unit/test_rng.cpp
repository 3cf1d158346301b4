#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "espn/rng.hpp"

namespace espn {
namespace {

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox4x32, KnownAnswers) {
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                 {0xffffffff, 0xffffffff}),
            (Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                 {0xa4093822, 0x299f31d0}),
            (Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, SameSeedSameStream) {
  CounterRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(CounterRng, BelowIsInRangeAndCoversIt) {
  CounterRng rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.below(13);
    ASSERT_LT(v, 13u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 13u);
}

TEST(CounterRng, NormalMoments) {
  CounterRng rng(3);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n - mean * mean, 1.0, 0.02);
}

TEST(FillGaussian, PrefixStableAcrossLengths) {
  std::vector<float> a(10), b(7);
  fill_gaussian(99, 0, 1.0f, a);
  fill_gaussian(99, 0, 1.0f, b);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(DeriveSeed, LabelsAndIndicesSeparateStreams) {
  EXPECT_EQ(derive_seed(1, "x", 2, 3), derive_seed(1, "x", 2, 3));
  EXPECT_NE(derive_seed(1, "x", 2, 3), derive_seed(1, "y", 2, 3));
  EXPECT_NE(derive_seed(1, "x", 2, 3), derive_seed(1, "x", 3, 2));
  EXPECT_NE(derive_seed(1, "x"), derive_seed(2, "x"));
}

}  // namespace
}  // namespace espn
