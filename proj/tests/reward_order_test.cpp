#include <gtest/gtest.h>

#include <cmath>

#include "bonlab/reward_order.hpp"
#include "oracles.hpp"

namespace bonlab {
namespace {

TEST(BuildOrder, InjectiveRewards) {
  const RewardOrder ro = build_order(testing::make_e1());
  EXPECT_EQ(ro.order, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(ro.cdf_strict[0], 0.0);
  EXPECT_DOUBLE_EQ(ro.cdf_strict[1], 0.5);
  EXPECT_DOUBLE_EQ(ro.cdf_strict[2], 0.8);
  EXPECT_NEAR(ro.cdf_inclusive[2], 1.0, 1e-12);
}

TEST(BuildOrder, TiesBrokenByLabel) {
  const Instance inst = make_tabular_instance({"y", "x"}, {0.6, 0.4}, {1, 1});
  const RewardOrder ro = build_order(inst);
  // x precedes y
  EXPECT_EQ(ro.order, (std::vector<std::size_t>{1, 0}));
  EXPECT_DOUBLE_EQ(ro.cdf_strict[1], 0.0);
  EXPECT_DOUBLE_EQ(ro.cdf_strict[0], 0.4);
  EXPECT_EQ(ro.level[0], ro.level[1]);
}

TEST(BuildOrder, SingleOutcome) {
  const RewardOrder ro = build_order(make_tabular_instance({"a"}, {1.0}, {0.0}));
  EXPECT_EQ(ro.cdf_strict, std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(ro.cdf_inclusive[0], 1.0);
}

TEST(CdfAt, ReturnsStrictCdf) {
  const RewardOrder ro = build_order(testing::make_e1());
  EXPECT_DOUBLE_EQ(cdf_at(ro, 1), 0.5);
  EXPECT_DOUBLE_EQ(cdf_at(ro, 0), 0.0);
  EXPECT_DOUBLE_EQ(cdf_at(ro, 2), 0.8);
  EXPECT_THROW(cdf_at(ro, 3), std::out_of_range);
}

TEST(BuildOrder, InvariantsOnRandomInstances) {
  const auto set = generate_random_instances(200, {2, 32}, RewardLaw::kGaussian, 5);
  for (const auto& inst : set.instances) {
    const RewardOrder ro = build_order(inst);
    EXPECT_EQ(ro.cdf_strict[ro.minimal()], 0.0);
    EXPECT_NEAR(ro.cdf_inclusive[ro.maximal()], 1.0, 1e-12);
    for (std::size_t pos = 1; pos < ro.size(); ++pos) {
      const auto lo = ro.order[pos - 1];
      const auto hi = ro.order[pos];
      EXPECT_LE(ro.cdf_strict[lo], ro.cdf_strict[hi]);
      EXPECT_TRUE(testing::beats(inst, hi, lo));
    }
    // oracle: direct summation over lower-reward outcomes
    const auto f = testing::brute_force_cdf(inst);
    for (std::size_t y = 0; y < inst.size(); ++y) {
      EXPECT_NEAR(ro.cdf_strict[y], f[y], 1e-14);
    }
  }
}

TEST(BuildOrder, TiedRewardsMatchOracle) {
  // quantized rewards force many ties
  auto set = generate_random_instances(100, {2, 12}, RewardLaw::kUniform01, 9);
  for (auto& inst : set.instances) {
    for (auto& r : inst.rewards) r = std::floor(r * 3.0);
    const RewardOrder ro = build_order(inst);
    const auto f = testing::brute_force_cdf(inst);
    for (std::size_t y = 0; y < inst.size(); ++y) {
      EXPECT_NEAR(ro.cdf_strict[y], f[y], 1e-14);
    }
  }
}

TEST(BuildOrder, MonotoneTransformInvariance) {
  const auto set = generate_random_instances(200, {2, 32}, RewardLaw::kGaussian, 6);
  for (const auto& inst : set.instances) {
    const RewardOrder base = build_order(inst);
    Instance cubed = inst;
    Instance shifted = inst;
    for (auto& r : cubed.rewards) r = r * r * r + 5.0 * r;
    for (auto& r : shifted.rewards) r = std::atan(r);
    for (const Instance* t : {&cubed, &shifted}) {
      const RewardOrder ro = build_order(*t);
      EXPECT_EQ(ro.order, base.order);
      EXPECT_EQ(ro.cdf_strict, base.cdf_strict);  // bitwise
      EXPECT_EQ(ro.cdf_inclusive, base.cdf_inclusive);
    }
  }
}

TEST(RewardOrderJson, MirrorsFields) {
  const nlohmann::json j = build_order(testing::make_e1());
  EXPECT_EQ(j.at("instance_id"), "E1");
  EXPECT_EQ(j.at("order").size(), 3u);
  EXPECT_DOUBLE_EQ(j.at("cdf_strict")[2].get<double>(), 0.8);
}

}  // namespace
}  // namespace bonlab
