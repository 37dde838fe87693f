#ifndef BONLAB_OBJECTIVES_HPP_
#define BONLAB_OBJECTIVES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/bon.hpp"
#include "bonlab/outcome_space.hpp"
#include "bonlab/reward_order.hpp"
#include "json.hpp"

namespace bonlab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Tabular softmax policy: one logit per outcome. Logits may be -inf, which
// encodes an exact zero (used for empirical policies such as BoN-SFT).
struct Policy {
  std::string instance_id;
  std::vector<double> logits;

  static Policy from_pmf(std::string id, std::span<const double> pmf) {
    Policy p{std::move(id), std::vector<double>(pmf.size())};
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      p.logits[i] = pmf[i] > 0.0 ? std::log(pmf[i]) : kNegInf;
    }
    return p;
  }

  std::size_t size() const { return logits.size(); }

  std::vector<double> log_pmf() const {
    if (logits.empty()) throw std::invalid_argument("Policy: no logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    if (!std::isfinite(m)) {
      throw std::invalid_argument("Policy: logits must have a finite maximum");
    }
    double total = 0.0;
    for (double t : logits) total += std::exp(t - m);
    const double lse = m + std::log(total);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits[i] - lse;
    return out;
  }

  std::vector<double> pmf() const {
    auto lp = log_pmf();
    for (auto& x : lp) x = std::exp(x);
    return lp;
  }
};

inline Policy reference_policy(const Instance& inst) {
  return Policy::from_pmf(inst.id, inst.p0);
}

inline Policy uniform_policy(const Instance& inst) {
  return Policy{inst.id, std::vector<double>(inst.size(), 0.0)};
}

enum class ObjectiveKind { kVbon, kL1, kL2, kKlRl };

inline std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kVbon: return "vbon";
    case ObjectiveKind::kL1: return "l1";
    case ObjectiveKind::kL2: return "l2";
    case ObjectiveKind::kKlRl: return "kl_rl";
  }
  return "?";
}

inline ObjectiveKind parse_objective_kind(const std::string& s) {
  if (s == "vbon") return ObjectiveKind::kVbon;
  if (s == "l1") return ObjectiveKind::kL1;
  if (s == "l2") return ObjectiveKind::kL2;
  if (s == "kl_rl") return ObjectiveKind::kKlRl;
  throw std::invalid_argument("unknown objective kind '" + s + "'");
}

// Coefficients of  gamma * E[log F] - alpha * H - beta * KL(pi || p0).
struct L1Coefficients {
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 1.0;

  // Coefficients obtained by applying Jensen to every summand of the BoN mass.
  static L1Coefficients jensen(int n) {
    const double nn = n;
    return {nn * (nn - 1.0) / 2.0, (nn + 2.0) * (nn - 1.0) / 2.0,
            nn * (nn + 1.0) / 2.0};
  }
  // Alternative valid setting; reduces L1 to L2.
  static L1Coefficients simplified(int n) {
    return {static_cast<double>(n) - 1.0, 0.0, 1.0};
  }
};

enum class L1Preset { kJensen, kSimplified };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kVbon;
  int n = 1;
  double beta = 1.0;
  double cdf_floor = 1e-8;  // 0 selects exact extended-real mode
  L1Preset l1_preset = L1Preset::kJensen;

  void validate() const {
    switch (kind) {
      case ObjectiveKind::kVbon:
      case ObjectiveKind::kL1:
      case ObjectiveKind::kL2:
        if (n < 1) throw std::invalid_argument(to_string(kind) + ": N must be >= 1");
        break;
      case ObjectiveKind::kKlRl:
        if (!(beta > 0.0) || !std::isfinite(beta)) {
          throw std::invalid_argument("kl_rl: beta must be > 0");
        }
        break;
    }
    if (!(cdf_floor >= 0.0) || cdf_floor >= 1.0) {
      throw std::invalid_argument("cdf_floor must lie in [0, 1)");
    }
  }
};

struct ObjectiveEval {
  double value = 0.0;
  std::vector<double> gradient;
  std::map<std::string, double> terms;
};

inline void to_json(nlohmann::json& j, const ObjectiveEval& e) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  };
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [k, v] : e.terms) terms[k] = num(v);
  nlohmann::json grad = nlohmann::json::array();
  for (double g : e.gradient) grad.push_back(num(g));
  j = nlohmann::json{{"value", num(e.value)}, {"gradient", grad}, {"terms", terms}};
}

// Every objective here has the form  E_pi[u] + c * H(pi)  for a fixed
// per-outcome score u (possibly -inf) and scalar c.
struct Integrand {
  std::vector<double> u;
  double c = 1.0;
};

namespace detail {

inline std::vector<double> floored_log_cdf(const RewardOrder& ro,
                                           double cdf_floor) {
  std::vector<double> out(ro.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double f = cdf_floor > 0.0 ? std::max(ro.cdf_strict[i], cdf_floor)
                                     : ro.cdf_strict[i];
    out[i] = f > 0.0 ? std::log(f) : kNegInf;
  }
  return out;
}

inline std::vector<double> log_of(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = p[i] > 0.0 ? std::log(p[i]) : kNegInf;
  }
  return out;
}

// a * x + b * y with the convention 0 * (-inf) = 0.
inline double combine(double a, double x, double b, double y) {
  const double left = a == 0.0 ? 0.0 : a * x;
  const double right = b == 0.0 ? 0.0 : b * y;
  return left + right;
}

inline void check_floor(double cdf_floor) {
  if (!(cdf_floor >= 0.0) || cdf_floor >= 1.0) {
    throw std::invalid_argument("cdf_floor must lie in [0, 1)");
  }
}

// Log-probabilities and probabilities of a policy. An outcome carries mass
// iff its log-probability is finite; pi may still underflow to 0 there.
struct PolicyView {
  std::vector<double> log_pi;
  std::vector<double> pi;

  explicit PolicyView(const Policy& policy) : log_pi(policy.log_pmf()) {
    pi.resize(log_pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = std::exp(log_pi[i]);
  }
  bool has_mass(std::size_t i) const { return log_pi[i] != kNegInf; }

  // E_pi[x] in extended reals.
  double expect(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      if (!has_mass(i)) continue;
      if (x[i] == kNegInf) return kNegInf;
      acc += pi[i] * x[i];
    }
    return acc;
  }
  double entropy() const {
    double h = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      if (has_mass(i)) h -= pi[i] * log_pi[i];
    }
    return h;
  }
  double kl_to(std::span<const double> q) const {
    double kl = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      if (!has_mass(i)) continue;
      if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
      kl += pi[i] * (log_pi[i] - std::log(q[i]));
    }
    return kl;
  }
};

inline L1Coefficients coefficients_for(const ObjectiveSpec& spec) {
  if (spec.kind == ObjectiveKind::kL2 ||
      spec.l1_preset == L1Preset::kSimplified) {
    return L1Coefficients::simplified(spec.n);
  }
  return L1Coefficients::jensen(spec.n);
}

}  // namespace detail

// Builds the score u and entropy weight c describing `spec`. For vbon the
// BoN distribution is computed unless supplied.
inline Integrand make_integrand(const ObjectiveSpec& spec, const Instance& inst,
                                const RewardOrder& ro,
                                const BonDistribution* bon = nullptr) {
  spec.validate();
  check_same_instance(inst.id, ro.instance_id, "make_integrand");
  const auto log_p0 = detail::log_of(inst.p0);
  Integrand ig;
  ig.u.resize(inst.size());
  switch (spec.kind) {
    case ObjectiveKind::kVbon:
      ig.u = bon != nullptr ? bon->log_pmf : exact_bon(inst, ro, spec.n).log_pmf;
      ig.c = 1.0;
      break;
    case ObjectiveKind::kL1:
    case ObjectiveKind::kL2: {
      const L1Coefficients co = detail::coefficients_for(spec);
      const auto log_f = detail::floored_log_cdf(ro, spec.cdf_floor);
      for (std::size_t i = 0; i < ig.u.size(); ++i) {
        ig.u[i] = detail::combine(co.gamma, log_f[i], co.beta, log_p0[i]);
      }
      ig.c = co.beta - co.alpha;
      break;
    }
    case ObjectiveKind::kKlRl:
      for (std::size_t i = 0; i < ig.u.size(); ++i) {
        ig.u[i] = detail::combine(1.0, inst.rewards[i], spec.beta, log_p0[i]);
      }
      ig.c = spec.beta;
      break;
  }
  return ig;
}

// Value and exact logit gradient of E_pi[u] + c H(pi). For softmax logits,
//   d/d theta_j = pi_j (v_j - E_pi[v]),  v = u - c log pi.
// A -inf value yields a NaN gradient.
inline ObjectiveEval evaluate_integrand(const Policy& policy,
                                        const Integrand& ig) {
  if (policy.size() != ig.u.size()) {
    throw std::invalid_argument("evaluate: policy size mismatch");
  }
  const detail::PolicyView pv(policy);
  const std::size_t k = policy.size();
  ObjectiveEval out;
  out.gradient.assign(k, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> v(k, 0.0);
  double mean_v = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!pv.has_mass(i)) continue;
    if (ig.u[i] == kNegInf) {
      out.value = kNegInf;
      return out;
    }
    v[i] = ig.u[i] - ig.c * pv.log_pi[i];
    mean_v += pv.pi[i] * v[i];
  }
  out.value = mean_v;
  for (std::size_t i = 0; i < k; ++i) {
    out.gradient[i] = pv.has_mass(i) ? pv.pi[i] * (v[i] - mean_v) : 0.0;
  }
  return out;
}

// Objective value at an arbitrary point of the simplex (zeros allowed,
// 0 log 0 = 0), so boundary limits can be evaluated exactly.
inline double value_at_distribution(std::span<const double> pmf,
                                    const Integrand& ig) {
  if (pmf.size() != ig.u.size()) {
    throw std::invalid_argument("value_at_distribution: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    if (pmf[i] <= 0.0) continue;
    if (ig.u[i] == kNegInf) return kNegInf;
    acc += pmf[i] * (ig.u[i] - ig.c * std::log(pmf[i]));
  }
  return acc;
}

// KL(pi || q) from the policy's log-probabilities; +inf on support violation.
inline double policy_kl(const Policy& policy, std::span<const double> q) {
  return detail::PolicyView(policy).kl_to(q);
}

inline double policy_entropy(const Policy& policy) {
  return detail::PolicyView(policy).entropy();
}

// -KL(pi || pi_bon) = E_pi[log pi_bon] + H(pi)
inline ObjectiveEval eval_vbon(const Policy& policy,
                               const BonDistribution& bon) {
  check_same_instance(policy.instance_id, bon.instance_id, "eval_vbon");
  ObjectiveEval out = evaluate_integrand(policy, Integrand{bon.log_pmf, 1.0});
  const detail::PolicyView pv(policy);
  out.terms["expected_log_bon"] = pv.expect(bon.log_pmf);
  out.terms["entropy"] = pv.entropy();
  return out;
}

namespace detail {

inline ObjectiveEval eval_lower_bound(const Policy& policy,
                                      const Instance& inst,
                                      const RewardOrder& ro,
                                      const ObjectiveSpec& spec) {
  check_same_instance(policy.instance_id, inst.id, to_string(spec.kind).c_str());
  check_same_instance(inst.id, ro.instance_id, to_string(spec.kind).c_str());
  if (spec.n < 1) throw std::invalid_argument(to_string(spec.kind) + ": N must be >= 1");
  check_floor(spec.cdf_floor);
  ObjectiveEval out = evaluate_integrand(policy, make_integrand(spec, inst, ro));
  const PolicyView pv(policy);
  const L1Coefficients co = coefficients_for(spec);
  out.terms["expected_log_cdf"] =
      pv.expect(floored_log_cdf(ro, spec.cdf_floor));
  out.terms["entropy"] = pv.entropy();
  out.terms["kl_to_reference"] = pv.kl_to(inst.p0);
  out.terms["gamma"] = co.gamma;
  out.terms["alpha"] = co.alpha;
  out.terms["beta"] = co.beta;
  return out;
}

}  // namespace detail

// L1 = gamma E[log F] - alpha H - beta KL(pi || p0). cdf_floor = 0 is exact
// extended-real mode (log F of the order-minimal outcome is -inf); otherwise
// F is replaced by max(F, cdf_floor).
inline ObjectiveEval eval_l1(const Policy& policy, const Instance& inst,
                             const RewardOrder& ro, int n, double cdf_floor,
                             L1Preset preset = L1Preset::kJensen) {
  ObjectiveSpec spec{ObjectiveKind::kL1, n, 1.0, cdf_floor, preset};
  return detail::eval_lower_bound(policy, inst, ro, spec);
}

// L2 = (N - 1) E[log F] - KL(pi || p0), same floor semantics as eval_l1.
inline ObjectiveEval eval_l2(const Policy& policy, const Instance& inst,
                             const RewardOrder& ro, int n, double cdf_floor) {
  ObjectiveSpec spec{ObjectiveKind::kL2, n, 1.0, cdf_floor};
  return detail::eval_lower_bound(policy, inst, ro, spec);
}

// E_pi[r] - beta KL(pi || p0)
inline ObjectiveEval eval_kl_rl(const Policy& policy, const Instance& inst,
                                double beta) {
  check_same_instance(policy.instance_id, inst.id, "eval_kl_rl");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("eval_kl_rl: beta must be > 0");
  }
  const RewardOrder ro = build_order(inst);
  ObjectiveSpec spec{ObjectiveKind::kKlRl, 1, beta, 0.0};
  ObjectiveEval out = evaluate_integrand(policy, make_integrand(spec, inst, ro));
  const detail::PolicyView pv(policy);
  out.terms["expected_reward"] = pv.expect(inst.rewards);
  out.terms["kl_to_reference"] = pv.kl_to(inst.p0);
  return out;
}

// Dispatch on spec.kind. `bon` is only consulted for vbon.
inline ObjectiveEval evaluate(const ObjectiveSpec& spec, const Policy& policy,
                              const Instance& inst, const RewardOrder& ro,
                              const BonDistribution* bon = nullptr) {
  spec.validate();
  switch (spec.kind) {
    case ObjectiveKind::kVbon:
      if (bon != nullptr) return eval_vbon(policy, *bon);
      return eval_vbon(policy, exact_bon(inst, ro, spec.n));
    case ObjectiveKind::kL1:
    case ObjectiveKind::kL2:
      return detail::eval_lower_bound(policy, inst, ro, spec);
    case ObjectiveKind::kKlRl:
      return eval_kl_rl(policy, inst, spec.beta);
  }
  throw std::logic_error("evaluate: unreachable");
}

// pi*(y) = p0(y) exp(r(y) / beta) / Z, Z summed over the enumerated space.
inline std::vector<double> closed_form_rl_optimum(const Instance& inst,
                                                  double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("closed_form_rl_optimum: beta must be > 0");
  }
  std::vector<double> logw(inst.size());
  double m = kNegInf;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    logw[i] = inst.p0[i] > 0.0 ? std::log(inst.p0[i]) + inst.rewards[i] / beta
                               : kNegInf;
    m = std::max(m, logw[i]);
  }
  std::vector<double> pmf(inst.size());
  double z = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    pmf[i] = logw[i] == kNegInf ? 0.0 : std::exp(logw[i] - m);
    z += pmf[i];
  }
  for (double& p : pmf) p /= z;
  return pmf;
}

}  // namespace bonlab

#endif  // BONLAB_OBJECTIVES_HPP_
