#include <gtest/gtest.h>

#include "espn/costmodel.hpp"
#include "espn/error.hpp"
#include "espn/nncore.hpp"
#include "espn/rng.hpp"

namespace espn {
namespace {

TEST(CostModel, ProtoNetFortyTimes) {
  const std::uint64_t d_psi = protonet_state_size(64, 10);
  EXPECT_EQ(d_psi, 2560u);
  CostInputs in{activation_bytes(EmbeddingNet{64}, 200), 1, EmbeddingNet{64}.param_count(), d_psi, 64};
  const CostReport r = compute_costs(in);
  EXPECT_EQ(r.ratio_num, 40u);
  EXPECT_EQ(r.ratio_den, 1u);
  EXPECT_EQ(r.fm_to_es_ratio(), 40.0);
  EXPECT_EQ(r.omega_fm, 40 * r.omega_es);
}

TEST(CostModel, StateSizes) {
  EXPECT_EQ(protonet_state_size(16, 20), 1280u);
  EXPECT_EQ(protonet_state_size(32, 1), 128u);
}

TEST(CostModel, FormulaArithmetic) {
  const CostReport r = compute_costs({1000000, 100, 100000, 1000, 256});
  EXPECT_EQ(r.omega_bp, 100000000u);
  EXPECT_EQ(r.omega_fm, 400000000u);
  EXPECT_EQ(r.omega_es, 102400000u);
  EXPECT_EQ(r.l1, 400u);
  EXPECT_EQ(r.l2, 103u);  // ceil(102.4)
  EXPECT_EQ(r.ratio_num, 125u);
  EXPECT_EQ(r.ratio_den, 32u);
}

TEST(CostModel, EqualityBoundary) {
  const CostReport r = compute_costs({777, 3, 5000, 300, 300});
  EXPECT_EQ(r.omega_es, r.omega_fm);
  EXPECT_EQ(r.l1, r.l2);
}

TEST(CostModel, Errors) {
  EXPECT_THROW(compute_costs({0, 1, 1, 1, 1}), ThresholdError);
  EXPECT_THROW(compute_costs({1, 1, 1, 1, 0}), ConfigError);
  EXPECT_THROW(compute_costs({1, 1, ~0ull, 4, 8}), ConfigError);
}

TEST(CostModel, MamlPreset) {
  const CostInputs m = maml_preset({10, 2, 7184, 320, 16});
  EXPECT_EQ(m.d_psi, 7184u);
}

// Randomized exact-integer properties.
TEST(CostModel, MonotonicityAndThresholdOrdering) {
  CounterRng rng(1);
  for (int t = 0; t < 5000; ++t) {
    CostInputs in{1 + rng.below(1u << 24), 1 + rng.below(1000), 1 + rng.below(1u << 20),
                  1 + rng.below(5000), 1 + rng.below(5000)};
    const CostReport r = compute_costs(in);
    CostInputs more_p = in, more_l = in;
    ++more_p.p;
    ++more_l.l;
    ASSERT_GT(compute_costs(more_p).omega_es, r.omega_es);
    ASSERT_GT(compute_costs(more_l).omega_bp, r.omega_bp);
    ASSERT_EQ(r.omega_es < r.omega_fm, in.p < in.d_psi);
    if (in.p < in.d_psi) ASSERT_LE(r.l2, r.l1);
    ASSERT_GE(r.l1 * in.g, r.omega_fm);
    ASSERT_LT((r.l1 - 1) * in.g, r.omega_fm);
    ASSERT_EQ(r.ratio_num * in.p, r.ratio_den * in.d_psi);
  }
}

TEST(CostModel, ReportMentionsRatio) {
  const CostInputs in{1000, 1, 111680, 2560, 64};
  const std::string s = format_report(in, compute_costs(in));
  EXPECT_NE(s.find("40"), std::string::npos);
}

}  // namespace
}  // namespace espn
