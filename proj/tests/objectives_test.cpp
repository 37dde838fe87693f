#include <gtest/gtest.h>

#include <cmath>

#include "bonlab/analysis.hpp"
#include "bonlab/objectives.hpp"
#include "oracles.hpp"

namespace bonlab {
namespace {

using testing::make_e1;

Policy random_policy(const Instance& inst, Rng& rng, double scale = 1.0) {
  return Policy{inst.id, testing::random_logits(rng, inst.size(), scale)};
}

TEST(Policy, SoftmaxNormalizedAndPositive) {
  Rng rng(1);
  const Instance e1 = make_e1();
  for (int i = 0; i < 50; ++i) {
    const Policy p = random_policy(e1, rng, 5.0);
    const auto pmf = p.pmf();
    double total = 0.0;
    for (double x : pmf) {
      EXPECT_GT(x, 0.0);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Policy, FromPmfRoundTrip) {
  const Instance e1 = make_e1();
  const auto back = reference_policy(e1).pmf();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back[i], e1.p0[i], 1e-15);
}

TEST(EvalVbon, EqualsNegativeReverseKl) {
  Rng rng(2);
  const auto set = generate_random_instances(40, {2, 16}, RewardLaw::kGaussian, 2);
  for (const auto& inst : set.instances) {
    const RewardOrder ro = build_order(inst);
    for (int n : {1, 2, 5, 32}) {
      const auto bon = exact_bon(inst, ro, n);
      const Policy pol = random_policy(inst, rng, 2.0);
      const auto ev = eval_vbon(pol, bon);
      EXPECT_NEAR(ev.value, -kl_divergence(pol.pmf(), bon.pmf), 1e-10);
      EXPECT_LE(ev.value, 1e-15);
      EXPECT_NEAR(ev.value, ev.terms.at("expected_log_bon") + ev.terms.at("entropy"),
                  1e-10);
    }
  }
}

TEST(EvalVbon, MaximizedAtBonDistribution) {
  const Instance e1 = make_e1();
  const auto bon = exact_bon(e1, build_order(e1), 2);
  const auto at_bon = eval_vbon(Policy::from_pmf("E1", bon.pmf), bon);
  EXPECT_NEAR(at_bon.value, 0.0, 1e-15);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    EXPECT_GE(at_bon.value, eval_vbon(random_policy(e1, rng, 2.0), bon).value);
  }
}

TEST(EvalVbon, UniformPolicyOnE1) {
  const Instance e1 = make_e1();
  const auto bon = exact_bon(e1, build_order(e1), 2);
  // (1/3)(log .25 + log .39 + log .36) + log 3
  EXPECT_NEAR(eval_vbon(uniform_policy(e1), bon).value, -0.017905760835329243, 1e-14);
}

TEST(EvalVbon, InstanceMismatchThrows) {
  const Instance e1 = make_e1();
  const auto bon = exact_bon(e1, build_order(e1), 2);
  EXPECT_THROW(eval_vbon(Policy{"other", {0, 0, 0}}, bon), std::invalid_argument);
}

TEST(EvalL1, NOneReducesToNegativeKl) {
  Rng rng(4);
  const Instance e1 = make_e1();
  const RewardOrder ro = build_order(e1);
  EXPECT_NEAR(eval_l1(reference_policy(e1), e1, ro, 1, 0.0).value, 0.0, 1e-15);
  for (int i = 0; i < 20; ++i) {
    const Policy p = random_policy(e1, rng);
    // exact mode: gamma = 0 removes the log F(a) = -inf term
    const auto ev = eval_l1(p, e1, ro, 1, 0.0);
    EXPECT_NEAR(ev.value, -policy_kl(p, e1.p0), 1e-13);
    EXPECT_DOUBLE_EQ(ev.terms.at("gamma"), 0.0);
    EXPECT_DOUBLE_EQ(ev.terms.at("alpha"), 0.0);
    EXPECT_DOUBLE_EQ(ev.terms.at("beta"), 1.0);
  }
}

TEST(EvalL1, ExactModeMassOnMinimalIsMinusInfinity) {
  const Instance e1 = make_e1();
  const auto ev = eval_l1(reference_policy(e1), e1, build_order(e1), 2, 0.0);
  EXPECT_EQ(ev.value, -INFINITY);
  EXPECT_TRUE(std::isnan(ev.gradient[0]));
}

TEST(EvalL1, FlooredAtReference) {
  const Instance e1 = make_e1();
  const auto ev = eval_l1(reference_policy(e1), e1, build_order(e1), 2, 1e-8);
  // 1*(0.3 log .5 + 0.2 log .8 + 0.5 log 1e-8) - 2 H(p0) - 3*0
  EXPECT_NEAR(ev.value, -11.522219264536158, 1e-12);
  EXPECT_NEAR(ev.terms.at("kl_to_reference"), 0.0, 1e-15);
}

TEST(EvalL1, RejectsFloorAtOrAboveOne) {
  const Instance e1 = make_e1();
  EXPECT_THROW(eval_l1(reference_policy(e1), e1, build_order(e1), 2, 1.0),
               std::invalid_argument);
  EXPECT_THROW(eval_l2(reference_policy(e1), e1, build_order(e1), 2, 1.5),
               std::invalid_argument);
}

TEST(EvalL1, TermsRecombine) {
  Rng rng(5);
  const auto set = generate_random_instances(20, {2, 12}, RewardLaw::kUniform01, 5);
  for (const auto& inst : set.instances) {
    const RewardOrder ro = build_order(inst);
    for (int n : {1, 2, 4, 8}) {
      const Policy p = random_policy(inst, rng);
      const auto ev = eval_l1(p, inst, ro, n, 1e-8);
      const auto& t = ev.terms;
      const double rebuilt = t.at("gamma") * t.at("expected_log_cdf") -
                             t.at("alpha") * t.at("entropy") -
                             t.at("beta") * t.at("kl_to_reference");
      EXPECT_NEAR(ev.value, rebuilt, 1e-10 * std::max(1.0, std::abs(ev.value)));
      const auto e2 = eval_l2(p, inst, ro, n, 1e-8);
      EXPECT_NEAR(e2.value,
                  (n - 1) * e2.terms.at("expected_log_cdf") -
                      e2.terms.at("kl_to_reference"),
                  1e-10 * std::max(1.0, std::abs(e2.value)));
    }
  }
}

TEST(EvalL1, SimplifiedPresetEqualsL2) {
  Rng rng(6);
  const auto set = generate_random_instances(20, {2, 12}, RewardLaw::kGaussian, 6);
  for (const auto& inst : set.instances) {
    const RewardOrder ro = build_order(inst);
    for (int n : {1, 2, 3, 9}) {
      const Policy p = random_policy(inst, rng);
      const auto a = eval_l1(p, inst, ro, n, 1e-6, L1Preset::kSimplified);
      const auto b = eval_l2(p, inst, ro, n, 1e-6);
      EXPECT_NEAR(a.value, b.value, 1e-12 * std::max(1.0, std::abs(b.value)));
      EXPECT_LT(testing::relative_error(a.gradient, b.gradient), 1e-12);
    }
  }
}

TEST(EvalL2, NOneMaximizedAtReference) {
  Rng rng(7);
  const Instance e1 = make_e1();
  const RewardOrder ro = build_order(e1);
  EXPECT_NEAR(eval_l2(reference_policy(e1), e1, ro, 1, 0.0).value, 0.0, 1e-15);
  for (int i = 0; i < 50; ++i) {
    EXPECT_LT(eval_l2(random_policy(e1, rng), e1, ro, 1, 0.0).value, 0.0);
  }
}

TEST(EvalL2, PointMassLimitOnBest) {
  const Instance e1 = make_e1();
  const RewardOrder ro = build_order(e1);
  const double limit = std::log(0.8) + std::log(0.2);
  ObjectiveSpec spec{ObjectiveKind::kL2, 2, 1.0, 0.0};
  const Integrand exact = make_integrand(spec, e1, ro);
  const std::vector<double> point = {0.0, 0.0, 1.0};
  EXPECT_NEAR(value_at_distribution(point, exact), limit, 1e-15);
  // softmax policies approaching the vertex; floored so the a-term stays finite
  double prev_gap = INFINITY;
  for (double scale : {5.0, 10.0, 20.0, 40.0}) {
    const Policy p{"E1", {-scale, -scale, scale}};
    const double gap = std::abs(eval_l2(p, e1, ro, 2, 1e-8).value - limit);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 1e-12);
}

// Exact extended-real mode over softmax policies: the chain holds with
// L1 = L2 = -inf as soon as N >= 2.
TEST(BoundChain, ExactModeOverPolicies) {
  Rng rng(8);
  const auto set = generate_random_instances(100, {2, 16}, RewardLaw::kUniform01, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance& inst = set.instances[trial % set.instances.size()];
    const RewardOrder ro = build_order(inst);
    const int n = 1 + static_cast<int>(rng.uniform_index(0, 7));
    const Policy p = random_policy(inst, rng, 2.0);
    const double j = eval_vbon(p, exact_bon(inst, ro, n)).value;
    const double l1 = eval_l1(p, inst, ro, n, 0.0).value;
    const double l2 = eval_l2(p, inst, ro, n, 0.0).value;
    EXPECT_GE(j, l1);
    EXPECT_GE(l1, l2);
  }
}

// Where both bounds are finite (no mass on the order-minimal outcome), L2 is
// the tighter bound: L1 - L2 = (N-1)(N-2)/2 E[log F] + (N+2)(N-1)/2 E[log p0].
TEST(BoundChain, FiniteBoundsOrderedVbonL2L1) {
  Rng rng(9);
  const auto set = generate_random_instances(100, {3, 16}, RewardLaw::kGaussian, 9);
  for (int trial = 0; trial < 500; ++trial) {
    const Instance& inst = set.instances[trial % set.instances.size()];
    const RewardOrder ro = build_order(inst);
    const int n = 1 + static_cast<int>(rng.uniform_index(0, 7));
    auto w = testing::random_logits(rng, inst.size());
    std::vector<double> pmf(inst.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      pmf[i] = i == ro.minimal() ? 0.0 : std::exp(w[i]);
      total += pmf[i];
    }
    for (double& x : pmf) x /= total;
    auto value = [&](ObjectiveKind kind) {
      return value_at_distribution(
          pmf, make_integrand(ObjectiveSpec{kind, n, 1.0, 0.0}, inst, ro));
    };
    const double j = value(ObjectiveKind::kVbon);
    const double l1 = value(ObjectiveKind::kL1);
    const double l2 = value(ObjectiveKind::kL2);
    ASSERT_TRUE(std::isfinite(l1));
    EXPECT_GE(j, l2 - 1e-12);
    EXPECT_GE(l2, l1 - 1e-12);
  }
}

TEST(EvalKlRl, AtReferenceIsExpectedReward) {
  const Instance e1 = make_e1();
  const auto ev = eval_kl_rl(reference_policy(e1), e1, 0.7);
  EXPECT_NEAR(ev.value, 1.7, 1e-15);
  EXPECT_NEAR(ev.terms.at("expected_reward"), 1.7, 1e-15);
}

TEST(EvalKlRl, RejectsNonPositiveBeta) {
  const Instance e1 = make_e1();
  EXPECT_THROW(eval_kl_rl(reference_policy(e1), e1, 0.0), std::invalid_argument);
  EXPECT_THROW(eval_kl_rl(reference_policy(e1), e1, -1.0), std::invalid_argument);
  EXPECT_THROW(closed_form_rl_optimum(e1, 0.0), std::invalid_argument);
}

TEST(ClosedFormRl, E1BetaOne) {
  const auto pmf = closed_form_rl_optimum(make_e1(), 1.0);
  // p0 e^r / sum p0 e^r
  EXPECT_NEAR(pmf[0], 0.1790000205742738, 1e-14);
  EXPECT_NEAR(pmf[1], 0.29194350193250623, 1e-14);
  EXPECT_NEAR(pmf[2], 0.5290564774932199, 1e-14);
}

TEST(ClosedFormRl, LargeBetaApproachesReference) {
  const Instance e1 = make_e1();
  EXPECT_LT(testing::tv_distance(closed_form_rl_optimum(e1, 1e9), e1.p0), 1e-6);
}

TEST(ClosedFormRl, SmallBetaNoOverflow) {
  const Instance e1 = make_e1();
  const auto pmf = closed_form_rl_optimum(e1, 1e-4);
  EXPECT_NEAR(pmf[2], 1.0, 1e-12);
}

TEST(ClosedFormRl, MaximizesKlRl) {
  Rng rng(10);
  const auto set = generate_random_instances(10, {2, 16}, RewardLaw::kGaussian, 10);
  for (const auto& inst : set.instances) {
    for (double beta : {0.05, 0.5, 3.0}) {
      const double best =
          eval_kl_rl(Policy::from_pmf(inst.id, closed_form_rl_optimum(inst, beta)),
                     inst, beta)
              .value;
      // value at the optimum is beta log Z
      double z = 0.0;
      for (std::size_t i = 0; i < inst.size(); ++i) {
        z += inst.p0[i] * std::exp(inst.rewards[i] / beta);
      }
      EXPECT_NEAR(best, beta * std::log(z), 1e-10);
      for (int i = 0; i < 100; ++i) {
        EXPECT_GE(best, eval_kl_rl(random_policy(inst, rng, 2.0), inst, beta).value);
      }
    }
  }
}

TEST(Gradients, MatchCentralDifferences) {
  Rng rng(11);
  const auto set = generate_random_instances(20, {2, 16}, RewardLaw::kGaussian, 11);
  const double h = 1e-5;
  double worst = 0.0;
  for (const auto& inst : set.instances) {
    const RewardOrder ro = build_order(inst);
    const std::vector<ObjectiveSpec> specs = {
        {ObjectiveKind::kVbon, 4, 1.0, 0.0},
        {ObjectiveKind::kL1, 3, 1.0, 1e-8},
        {ObjectiveKind::kL2, 6, 1.0, 1e-8},
        {ObjectiveKind::kKlRl, 1, 0.3, 0.0},
    };
    for (const auto& spec : specs) {
      const Integrand ig = make_integrand(spec, inst, ro);
      for (int i = 0; i < 20; ++i) {
        const auto logits = testing::random_logits(rng, inst.size());
        const auto ev = evaluate(spec, Policy{inst.id, logits}, inst, ro);
        const auto fd = testing::central_difference(
            [&](const std::vector<double>& x) {
              return evaluate_integrand(Policy{inst.id, x}, ig).value;
            },
            logits, h);
        const double err = testing::relative_error(ev.gradient, fd);
        worst = std::max(worst, err);
        EXPECT_LT(err, 1e-6) << to_string(spec.kind);
      }
    }
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(MonotoneInvariance, BonObjectivesBitwiseKlRlChanges) {
  Rng rng(12);
  const auto set = generate_random_instances(50, {2, 16}, RewardLaw::kUniform01, 12);
  for (const auto& inst : set.instances) {
    Instance affine = inst;
    for (auto& r : affine.rewards) r = 2.0 * r + 1.0;
    const RewardOrder ro = build_order(inst);
    const RewardOrder ro2 = build_order(affine);
    const Policy p = random_policy(inst, rng);
    for (int n : {2, 5}) {
      EXPECT_EQ(eval_vbon(p, exact_bon(inst, ro, n)).value,
                eval_vbon(p, exact_bon(affine, ro2, n)).value);
      EXPECT_EQ(eval_l1(p, inst, ro, n, 1e-8).value,
                eval_l1(p, affine, ro2, n, 1e-8).value);
      EXPECT_EQ(eval_l2(p, inst, ro, n, 1e-8).value,
                eval_l2(p, affine, ro2, n, 1e-8).value);
    }
    EXPECT_NE(eval_kl_rl(p, inst, 0.5).value, eval_kl_rl(p, affine, 0.5).value);
  }
}

TEST(ObjectiveEvalJson, NonFiniteAsStrings) {
  const Instance e1 = make_e1();
  const nlohmann::json j = eval_l1(reference_policy(e1), e1, build_order(e1), 2, 0.0);
  EXPECT_EQ(j.at("value"), "-inf");
  EXPECT_EQ(j.at("gradient")[0], "nan");
  EXPECT_TRUE(j.at("terms").contains("entropy"));
}

TEST(ObjectiveSpec, Validation) {
  EXPECT_THROW((ObjectiveSpec{ObjectiveKind::kVbon, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((ObjectiveSpec{ObjectiveKind::kKlRl, 1, -1.0}).validate(),
               std::invalid_argument);
  EXPECT_THROW((ObjectiveSpec{ObjectiveKind::kL2, 2, 1.0, 1.0}).validate(),
               std::invalid_argument);
  EXPECT_NO_THROW((ObjectiveSpec{ObjectiveKind::kL2, 2, 1.0, 0.0}).validate());
  EXPECT_EQ(parse_objective_kind("kl_rl"), ObjectiveKind::kKlRl);
  EXPECT_THROW(parse_objective_kind("ppo"), std::invalid_argument);
}

}  // namespace
}  // namespace bonlab
