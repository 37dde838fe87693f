#ifndef BONLAB_ANALYSIS_HPP_
#define BONLAB_ANALYSIS_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/reward_order.hpp"

namespace bonlab {

// KL(p || q) = sum p log(p / q), with 0 log 0 = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (!(q[i] > 0.0)) {
      throw std::invalid_argument("kl_divergence: q has no mass where p does");
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  // p log(p/q) summands can round to a tiny negative total when p == q
  return kl < 0.0 ? 0.0 : kl;
}

inline double expected_reward(std::span<const double> pmf,
                              std::span<const double> rewards) {
  if (pmf.size() != rewards.size()) {
    throw std::invalid_argument("expected_reward: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) acc += pmf[i] * rewards[i];
  return acc;
}

// P(r(Y) > r(Y')) + 0.5 P(r(Y) = r(Y')) for independent Y ~ policy,
// Y' ~ reference. Ties are at the reward level.
inline double win_rate(std::span<const double> policy_pmf,
                       std::span<const double> reference_pmf,
                       const RewardOrder& ro) {
  if (policy_pmf.size() != ro.size() || reference_pmf.size() != ro.size()) {
    throw std::invalid_argument("win_rate: instance mismatch");
  }
  double w = 0.0;
  for (std::size_t a = 0; a < ro.size(); ++a) {
    for (std::size_t b = 0; b < ro.size(); ++b) {
      const double joint = policy_pmf[a] * reference_pmf[b];
      if (ro.level[a] > ro.level[b]) {
        w += joint;
      } else if (ro.level[a] == ro.level[b]) {
        w += 0.5 * joint;
      }
    }
  }
  return w;
}

// P(Y strictly above Y' in the total order); identical outcomes never win.
inline double win_rate_order_strict(std::span<const double> policy_pmf,
                                    std::span<const double> reference_pmf,
                                    const RewardOrder& ro) {
  if (policy_pmf.size() != ro.size() || reference_pmf.size() != ro.size()) {
    throw std::invalid_argument("win_rate_order_strict: instance mismatch");
  }
  double w = 0.0;
  for (std::size_t a = 0; a < ro.size(); ++a) {
    for (std::size_t b = 0; b < ro.size(); ++b) {
      if (ro.rank[a] > ro.rank[b]) w += policy_pmf[a] * reference_pmf[b];
    }
  }
  return w;
}

// Win rate of the BoN winner over a reference draw when the total order is
// refined inside each outcome: outcome y is identified with the interval
// [F(y), F(y) + p0(y)) and every draw with a uniform point in its interval,
// so no two draws tie and the BoN winner is the largest of N such points.
// bon_pmf is the winner's outcome law. Within one outcome the winning
// probability integrates N u^(N-1) (u - a) over the outcome's interval [a, b].
inline double bon_win_rate_refined(std::span<const double> bon_pmf,
                                   const RewardOrder& ro,
                                   std::span<const double> p0, int n) {
  if (n < 1) throw std::invalid_argument("bon_win_rate_refined: N must be >= 1");
  if (p0.size() != ro.size() || bon_pmf.size() != ro.size()) {
    throw std::invalid_argument("bon_win_rate_refined: size mismatch");
  }
  const double nn = n;
  double w = 0.0;
  for (std::size_t y = 0; y < ro.size(); ++y) {
    const double a = ro.cdf_strict[y];
    const double b = a + p0[y];
    for (std::size_t z = 0; z < ro.size(); ++z) {
      if (ro.rank[z] < ro.rank[y]) w += bon_pmf[y] * p0[z];
    }
    w += nn / (nn + 1.0) * (std::pow(b, nn + 1.0) - std::pow(a, nn + 1.0)) -
         a * (std::pow(b, nn) - std::pow(a, nn));
  }
  return w;
}

struct MetricRecord {
  std::string method;
  double hyperparameter = 0.0;
  std::uint64_t seed = 0;
  double kl_to_p0 = 0.0;
  double expected_reward = 0.0;
  double win_rate = 0.5;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

enum class FrontAxis { kWinRate, kExpectedReward };

inline std::string to_string(FrontAxis axis) {
  return axis == FrontAxis::kWinRate ? "win_rate" : "expected_reward";
}

struct ParetoPoint {
  MetricRecord record;
  bool on_front = false;
  FrontAxis front_axis = FrontAxis::kWinRate;
};

struct ParetoResult {
  std::vector<ParetoPoint> points;  // same order as the input records
  std::map<std::string, double> method_share;  // percent of front points
  std::size_t front_size = 0;
};

inline double front_metric(const MetricRecord& r, FrontAxis axis) {
  return axis == FrontAxis::kWinRate ? r.win_rate : r.expected_reward;
}

// Marks records not weakly dominated on (minimize KL, maximize metric).
// Failed records are never on the front.
inline ParetoResult pareto_front(std::span<const MetricRecord> records,
                                 FrontAxis axis) {
  if (records.empty()) throw std::invalid_argument("pareto_front: no records");
  ParetoResult res;
  res.points.reserve(records.size());
  for (const auto& r : records) {
    bool dominated = !r.ok();
    const double m = front_metric(r, axis);
    for (const auto& o : records) {
      if (dominated) break;
      if (!o.ok()) continue;
      const double om = front_metric(o, axis);
      const bool no_worse = o.kl_to_p0 <= r.kl_to_p0 && om >= m;
      const bool better = o.kl_to_p0 < r.kl_to_p0 || om > m;
      dominated = no_worse && better;
    }
    res.points.push_back({r, !dominated, axis});
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& p : res.points) {
    counts.try_emplace(p.record.method, 0);
    if (p.on_front) {
      ++counts[p.record.method];
      ++res.front_size;
    }
  }
  for (const auto& [method, c] : counts) {
    res.method_share[method] =
        res.front_size == 0 ? 0.0
                            : 100.0 * static_cast<double>(c) /
                                  static_cast<double>(res.front_size);
  }
  return res;
}

struct BonReference {
  int n = 1;
  double kl_bound = 0.0;  // log N - (N - 1) / N
  double win_rate = 0.5;  // N / (N + 1)
};

inline std::vector<BonReference> bon_reference_curve(std::span<const int> n_grid) {
  std::vector<BonReference> out;
  out.reserve(n_grid.size());
  for (int n : n_grid) {
    if (n < 1) throw std::invalid_argument("bon_reference_curve: N must be >= 1");
    const double nn = n;
    out.push_back({n, std::log(nn) - (nn - 1.0) / nn, nn / (nn + 1.0)});
  }
  return out;
}

}  // namespace bonlab

#endif  // BONLAB_ANALYSIS_HPP_
