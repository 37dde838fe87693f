#ifndef BONLAB_OPTIMIZER_HPP_
#define BONLAB_OPTIMIZER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/analysis.hpp"
#include "bonlab/bon.hpp"
#include "bonlab/cdf_estimation.hpp"
#include "bonlab/objectives.hpp"
#include "bonlab/outcome_space.hpp"
#include "bonlab/random.hpp"
#include "bonlab/reward_order.hpp"
#include "json.hpp"

namespace bonlab {

enum class OptimizerMode { kExactGradient, kSampled };

// kNatural preconditions the logit gradient by the softmax Fisher metric,
// i.e. moves along v - E_pi[v]; kEuclidean is plain gradient ascent.
enum class AscentDirection { kNatural, kEuclidean };

enum class InitPolicy { kReference, kUniform };

struct OptimizerConfig {
  double step_size = 0.1;
  int max_steps = 5000;
  double tolerance = 1e-9;  // stop when max |gradient| falls below
  OptimizerMode mode = OptimizerMode::kExactGradient;
  std::size_t batch = 256;  // sampled mode only
  std::uint64_t seed = 0;
  AscentDirection direction = AscentDirection::kNatural;
  InitPolicy init = InitPolicy::kReference;
  std::size_t cdf_samples = 250;  // sampled mode, M for the F estimate
  double armijo = 1e-4;
  double max_step_size = 1e8;

  void validate() const {
    if (!(step_size > 0.0)) throw std::invalid_argument("optimizer: step_size must be > 0");
    if (!(tolerance > 0.0)) throw std::invalid_argument("optimizer: tolerance must be > 0");
    if (max_steps < 0) throw std::invalid_argument("optimizer: max_steps must be >= 0");
    if (mode == OptimizerMode::kSampled && (batch == 0 || cdf_samples == 0)) {
      throw std::invalid_argument("optimizer: batch and cdf_samples must be >= 1");
    }
  }
};

struct TraceRecord {
  int step = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double kl = 0.0;
  double expected_reward = 0.0;
};

enum class OptimizationStatus { kConverged, kMaxSteps, kStalled };

inline std::string to_string(OptimizationStatus s) {
  switch (s) {
    case OptimizationStatus::kConverged: return "converged";
    case OptimizationStatus::kMaxSteps: return "max_steps";
    case OptimizationStatus::kStalled: return "stalled";
  }
  return "?";
}

struct OptimizationTrace {
  std::vector<TraceRecord> records;  // one per accepted iterate, step 0 first
  Policy final_policy;
  OptimizationStatus status = OptimizationStatus::kMaxSteps;
};

inline void to_json(nlohmann::json& j, const TraceRecord& r) {
  j = nlohmann::json{{"step", r.step},
                     {"value", r.value},
                     {"grad_norm", r.grad_norm},
                     {"kl", r.kl},
                     {"expected_reward", r.expected_reward}};
}

// One JSON object per line.
inline std::string trace_jsonl(const OptimizationTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    out += nlohmann::json(r).dump();
    out += '\n';
  }
  return out;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Unbiased score-function estimate of the logit gradient of E_pi[u] + c H(pi)
// from i.i.d. draws y_b ~ pi:
//   (1/B) sum_b (w(y_b) - baseline_b) (e_{y_b} - pi),  w = u - c log pi.
// With B >= 2 the baseline is the leave-one-out mean of w; with B = 1 it is 0.
inline std::vector<double> score_function_gradient(
    std::span<const double> pi, std::span<const double> log_pi,
    const Integrand& ig, std::span<const std::size_t> draws) {
  const std::size_t k = pi.size();
  const std::size_t b = draws.size();
  std::vector<double> g(k, 0.0);
  if (b == 0) return g;
  std::vector<double> w(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t y = draws[i];
    w[i] = ig.u[y] - ig.c * log_pi[y];
    total += w[i];
  }
  for (std::size_t i = 0; i < b; ++i) {
    const double baseline =
        b >= 2 ? (total - w[i]) / static_cast<double>(b - 1) : 0.0;
    const double adv = (w[i] - baseline) / static_cast<double>(b);
    g[draws[i]] += adv;
    for (std::size_t j = 0; j < k; ++j) g[j] -= adv * pi[j];
  }
  return g;
}

namespace detail {

inline TraceRecord make_record(int step, const ObjectiveEval& ev,
                               const Policy& policy, const Instance& inst) {
  const auto pmf = policy.pmf();
  return {step, ev.value, max_abs(ev.gradient), policy_kl(policy, inst.p0),
          expected_reward(pmf, inst.rewards)};
}

inline Policy initial_policy(const Instance& inst, InitPolicy init) {
  return init == InitPolicy::kUniform ? uniform_policy(inst)
                                      : reference_policy(inst);
}

// Ascent direction at `policy`; returns the directional slope g . d.
inline double ascent_direction(const Policy& policy, const Integrand& ig,
                               const ObjectiveEval& ev, AscentDirection dir,
                               std::vector<double>& d) {
  const std::size_t k = policy.size();
  d.assign(k, 0.0);
  if (dir == AscentDirection::kEuclidean) {
    d = ev.gradient;
  } else {
    const PolicyView pv(policy);
    double mean_v = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (pv.has_mass(i)) mean_v += pv.pi[i] * (ig.u[i] - ig.c * pv.log_pi[i]);
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (pv.has_mass(i)) d[i] = ig.u[i] - ig.c * pv.log_pi[i] - mean_v;
    }
  }
  double slope = 0.0;
  for (std::size_t i = 0; i < k; ++i) slope += ev.gradient[i] * d[i];
  return slope;
}

inline OptimizationTrace run_exact(const Instance& inst, const Integrand& ig,
                                   const OptimizerConfig& cfg) {
  OptimizationTrace trace;
  Policy policy = initial_policy(inst, cfg.init);
  ObjectiveEval ev = evaluate_integrand(policy, ig);
  if (!std::isfinite(ev.value)) {
    throw std::domain_error(
        "optimize: objective is not finite at initialization; use cdf_floor > 0 "
        "for the lower-bound objectives");
  }
  trace.records.push_back(make_record(0, ev, policy, inst));
  double t = cfg.step_size;
  std::vector<double> d;
  trace.status = OptimizationStatus::kMaxSteps;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    if (trace.records.back().grad_norm < cfg.tolerance) {
      trace.status = OptimizationStatus::kConverged;
      break;
    }
    const double slope = ascent_direction(policy, ig, ev, cfg.direction, d);
    if (!(slope > 0.0)) {
      trace.status = OptimizationStatus::kStalled;
      break;
    }
    // predicted gain too small to register in the objective value: the
    // iterate is optimal to machine precision
    const double resolution =
        64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(ev.value));
    const double predicted = t * slope;
    bool accepted = false;
    Policy candidate = policy;
    ObjectiveEval cand_ev;
    for (int halving = 0; halving < 80; ++halving) {
      bool moved = false;
      for (std::size_t i = 0; i < d.size(); ++i) {
        candidate.logits[i] = policy.logits[i] + t * d[i];
        moved = moved || candidate.logits[i] != policy.logits[i];
      }
      if (!moved) break;
      cand_ev = evaluate_integrand(candidate, ig);
      if (std::isfinite(cand_ev.value) &&
          cand_ev.value >= ev.value + cfg.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      trace.status = predicted <= resolution ? OptimizationStatus::kConverged
                                             : OptimizationStatus::kStalled;
      break;
    }
    policy = std::move(candidate);
    ev = std::move(cand_ev);
    trace.records.push_back(make_record(step, ev, policy, inst));
    t = std::min(2.0 * t, cfg.max_step_size);
  }
  if (trace.status == OptimizationStatus::kMaxSteps &&
      trace.records.back().grad_norm < cfg.tolerance) {
    trace.status = OptimizationStatus::kConverged;
  }
  trace.final_policy = std::move(policy);
  return trace;
}

// Score with log F replaced by the floored Monte Carlo estimate.
inline Integrand estimated_integrand(const ObjectiveSpec& spec,
                                     const Instance& inst,
                                     const RewardOrder& ro, std::size_t m,
                                     std::uint64_t seed) {
  const EstimatedCdf est = estimate_cdf(inst, ro, m, seed);
  const L1Coefficients co = coefficients_for(spec);
  Integrand ig;
  ig.u.resize(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const double log_f = log_cdf_floored(est, i, FloorRule::kOneOverMPlusOne);
    const double log_p = inst.p0[i] > 0.0 ? std::log(inst.p0[i]) : kNegInf;
    ig.u[i] = combine(co.gamma, log_f, co.beta, log_p);
  }
  ig.c = co.beta - co.alpha;
  return ig;
}

inline OptimizationTrace run_sampled(const Instance& inst,
                                     const RewardOrder& ro,
                                     const ObjectiveSpec& spec,
                                     const Integrand& exact_ig,
                                     const OptimizerConfig& cfg) {
  OptimizationTrace trace;
  Policy policy = initial_policy(inst, cfg.init);
  ObjectiveEval ev = evaluate_integrand(policy, exact_ig);
  trace.records.push_back(make_record(0, ev, policy, inst));
  const bool estimate_f =
      spec.kind == ObjectiveKind::kL1 || spec.kind == ObjectiveKind::kL2;
  Rng rng(SeedHasher().add(cfg.seed).add("sampled").add(inst.id).value());
  std::vector<std::size_t> draws(cfg.batch);
  for (int step = 1; step <= cfg.max_steps; ++step) {
    const Integrand ig =
        estimate_f ? estimated_integrand(spec, inst, ro, cfg.cdf_samples,
                                         rng.next_u64())
                   : exact_ig;
    const PolicyView pv(policy);
    const CategoricalSampler sampler(pv.pi);
    for (auto& y : draws) y = sampler(rng);
    const auto g = score_function_gradient(pv.pi, pv.log_pi, ig, draws);
    for (std::size_t i = 0; i < g.size(); ++i) {
      policy.logits[i] += cfg.step_size * g[i];
    }
    ev = evaluate_integrand(policy, exact_ig);
    trace.records.push_back(make_record(step, ev, policy, inst));
  }
  trace.status = OptimizationStatus::kMaxSteps;
  trace.final_policy = std::move(policy);
  return trace;
}

}  // namespace detail

// Maximizes `spec` over tabular softmax policies. Exact mode: gradient
// ascent with Armijo backtracking (halving) and step doubling after each
// accepted step, until max |gradient| < tolerance. Sampled mode: fixed-step
// stochastic ascent with the score-function estimator; l1/l2 use a fresh
// floored Monte Carlo estimate of log F at every step. The recorded values
// are always the exact (floored) objective.
inline OptimizationTrace optimize(const Instance& inst, const RewardOrder& ro,
                                  const ObjectiveSpec& spec,
                                  const OptimizerConfig& cfg) {
  spec.validate();
  cfg.validate();
  check_same_instance(inst.id, ro.instance_id, "optimize");
  const Integrand ig = make_integrand(spec, inst, ro);
  if (cfg.mode == OptimizerMode::kSampled) {
    return detail::run_sampled(inst, ro, spec, ig, cfg);
  }
  return detail::run_exact(inst, ig, cfg);
}

inline OptimizationTrace optimize_kl_rl(const Instance& inst, double beta,
                                        const OptimizerConfig& cfg) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kKlRl;
  spec.beta = beta;
  return optimize(inst, build_order(inst), spec, cfg);
}

// Maximum-likelihood tabular policy fitted to `sample_count` BoN winners,
// with add-lambda smoothing.
inline Policy bon_sft(const Instance& inst, const RewardOrder& ro, int n,
                      std::size_t sample_count, double smoothing,
                      std::uint64_t seed) {
  if (sample_count == 0) throw std::invalid_argument("bon_sft: sample_count must be >= 1");
  if (!(smoothing >= 0.0)) throw std::invalid_argument("bon_sft: smoothing must be >= 0");
  const auto counts = sample_bon_counts(inst, ro, n, sample_count, seed);
  const double denom = static_cast<double>(sample_count) +
                       smoothing * static_cast<double>(inst.size());
  std::vector<double> pmf(inst.size());
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    pmf[i] = (static_cast<double>(counts[i]) + smoothing) / denom;
  }
  return Policy::from_pmf(inst.id, pmf);
}

}  // namespace bonlab

#endif  // BONLAB_OPTIMIZER_HPP_
