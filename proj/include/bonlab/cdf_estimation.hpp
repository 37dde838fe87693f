#ifndef BONLAB_CDF_ESTIMATION_HPP_
#define BONLAB_CDF_ESTIMATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/outcome_space.hpp"
#include "bonlab/parallel.hpp"
#include "bonlab/random.hpp"
#include "bonlab/reward_order.hpp"

namespace bonlab {

// Monte Carlo estimate of F from M draws of p0:
//   f_hat[y] = #{samples strictly below y in the reward order} / M
struct EstimatedCdf {
  std::string instance_id;
  std::size_t m = 0;
  std::uint64_t sample_seed = 0;
  std::vector<std::size_t> below;  // per outcome index
  std::vector<double> f_hat;       // per outcome index
};

inline EstimatedCdf estimate_cdf_from_samples(const RewardOrder& ro,
                                              std::span<const std::size_t> samples,
                                              std::uint64_t seed = 0) {
  if (samples.empty()) throw std::invalid_argument("estimate_cdf: M must be >= 1");
  std::vector<std::size_t> counts(ro.size(), 0);
  for (std::size_t y : samples) {
    if (y >= ro.size()) throw std::out_of_range("estimate_cdf: sample index out of range");
    ++counts[y];
  }
  EstimatedCdf est;
  est.instance_id = ro.instance_id;
  est.m = samples.size();
  est.sample_seed = seed;
  est.below.resize(ro.size());
  est.f_hat.resize(ro.size());
  std::size_t acc = 0;
  for (std::size_t idx : ro.order) {
    est.below[idx] = acc;
    est.f_hat[idx] = static_cast<double>(acc) / static_cast<double>(est.m);
    acc += counts[idx];
  }
  return est;
}

// Draws are taken from a single stream per seed, so an estimate with M
// samples uses exactly the first M draws of any larger estimate.
inline EstimatedCdf estimate_cdf(const Instance& inst, const RewardOrder& ro,
                                 std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("estimate_cdf: M must be >= 1");
  if (inst.id != ro.instance_id) {
    throw std::invalid_argument("estimate_cdf: instance mismatch");
  }
  const CategoricalSampler sampler(inst.p0);
  Rng rng(seed);
  std::vector<std::size_t> samples(m);
  for (auto& s : samples) s = sampler(rng);
  return estimate_cdf_from_samples(ro, samples, seed);
}

enum class FloorRule { kNone, kOneOverMPlusOne };

inline double log_cdf_floored(const EstimatedCdf& est, std::size_t outcome,
                              FloorRule rule) {
  if (outcome >= est.f_hat.size()) {
    throw std::out_of_range("log_cdf_floored: outcome index out of range");
  }
  double f = est.f_hat[outcome];
  if (rule == FloorRule::kOneOverMPlusOne) {
    f = std::max(f, 1.0 / static_cast<double>(est.m + 1));
  }
  return f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
}

// Survival function of the Kolmogorov distribution, P(K > x).
inline double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (x < 1.18) {
    // P(K <= x) = sqrt(2 pi) / x * sum_k exp(-(2k-1)^2 pi^2 / (8 x^2))
    const double w = pi * pi / (8.0 * x * x);
    double sum = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double j = 2.0 * k - 1.0;
      sum += std::exp(-j * j * w);
    }
    const double cdf = std::sqrt(2.0 * pi) / x * sum;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  // P(K > x) = 2 sum_k (-1)^(k-1) exp(-2 k^2 x^2)
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsReport {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

inline constexpr double kKsSignificance = 0.05;

// Two-sample KS test; asymptotic p-value with effective size M1 M2 / (M1 + M2).
inline KsReport ks_two_sample(const EstimatedCdf& a, const EstimatedCdf& b) {
  if (a.instance_id != b.instance_id || a.f_hat.size() != b.f_hat.size()) {
    throw std::invalid_argument("ks_two_sample: instance mismatch");
  }
  KsReport rep;
  for (std::size_t i = 0; i < a.f_hat.size(); ++i) {
    rep.statistic = std::max(rep.statistic, std::abs(a.f_hat[i] - b.f_hat[i]));
  }
  if (rep.statistic == 0.0) return rep;
  const double ma = static_cast<double>(a.m);
  const double mb = static_cast<double>(b.m);
  const double ne = ma * mb / (ma + mb);
  rep.p_value = kolmogorov_survival(std::sqrt(ne) * rep.statistic);
  rep.reject = rep.p_value < kKsSignificance;
  return rep;
}

struct ConvergenceRow {
  std::size_t m = 0;
  std::size_t rejected = 0;
  std::size_t total = 0;
  double rejection_rate = 0.0;
  // Means over rejected instances only; NaN when none were rejected.
  double mean_statistic = std::numeric_limits<double>::quiet_NaN();
  double mean_p_value = std::numeric_limits<double>::quiet_NaN();
};

inline std::uint64_t estimation_seed(std::uint64_t seed, const std::string& id) {
  return SeedHasher().add(seed).add("cdf").add(id).value();
}

// Compares the M-sample estimate of every instance against its reference_m
// estimate (same sample stream) for each M in m_grid.
inline std::vector<ConvergenceRow> convergence_study(
    const InstanceSet& set, std::span<const std::size_t> m_grid,
    std::size_t reference_m, std::uint64_t seed, std::size_t jobs = 1) {
  if (set.instances.empty()) {
    throw std::invalid_argument("convergence_study: empty instance set");
  }
  if (m_grid.empty()) throw std::invalid_argument("convergence_study: empty M grid");
  const std::size_t max_m = *std::max_element(m_grid.begin(), m_grid.end());
  if (reference_m < max_m) {
    throw std::invalid_argument(
        "convergence_study: reference M must be at least the largest grid M");
  }
  const std::size_t n_inst = set.instances.size();
  std::vector<std::vector<KsReport>> reports(n_inst);
  parallel_for(n_inst, jobs, [&](std::size_t i) {
    const Instance& inst = set.instances[i];
    const RewardOrder ro = build_order(inst);
    const std::uint64_t s = estimation_seed(seed, inst.id);
    const EstimatedCdf ref = estimate_cdf(inst, ro, reference_m, s);
    reports[i].reserve(m_grid.size());
    for (std::size_t m : m_grid) {
      reports[i].push_back(ks_two_sample(estimate_cdf(inst, ro, m, s), ref));
    }
  });
  std::vector<ConvergenceRow> rows;
  for (std::size_t g = 0; g < m_grid.size(); ++g) {
    ConvergenceRow row;
    row.m = m_grid[g];
    row.total = n_inst;
    double stat = 0.0;
    double pval = 0.0;
    for (std::size_t i = 0; i < n_inst; ++i) {
      const KsReport& r = reports[i][g];
      if (!r.reject) continue;
      ++row.rejected;
      stat += r.statistic;
      pval += r.p_value;
    }
    row.rejection_rate = static_cast<double>(row.rejected) / static_cast<double>(n_inst);
    if (row.rejected > 0) {
      row.mean_statistic = stat / static_cast<double>(row.rejected);
      row.mean_p_value = pval / static_cast<double>(row.rejected);
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

// ks_table.csv; empty fields mark "no rejected instance".
inline std::string convergence_csv(std::span<const ConvergenceRow> rows) {
  std::string out = "M,rejection_rate,mean_statistic,mean_p_value\n";
  for (const auto& r : rows) {
    out += std::to_string(r.m) + "," + format_number(r.rejection_rate) + "," +
           format_number(r.mean_statistic) + "," + format_number(r.mean_p_value) +
           "\n";
  }
  return out;
}

}  // namespace bonlab

#endif  // BONLAB_CDF_ESTIMATION_HPP_
