#ifndef BONLAB_BON_HPP_
#define BONLAB_BON_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/outcome_space.hpp"
#include "bonlab/random.hpp"
#include "bonlab/reward_order.hpp"
#include "json.hpp"

namespace bonlab {

// Law of the Best-of-N winner: draw N i.i.d. outcomes from p0, keep the
// maximum under the reward order.
struct BonDistribution {
  std::string instance_id;
  int n = 1;
  std::vector<double> pmf;
  std::vector<double> log_pmf;  // kept separately; pmf underflows for large N
};

inline void check_same_instance(const std::string& a, const std::string& b,
                                const char* where) {
  if (a != b) {
    throw std::invalid_argument(std::string(where) + ": instance mismatch ('" +
                                a + "' vs '" + b + "')");
  }
}

// pmf(y) = (F + p0)^N - F^N, evaluated as
//   log pmf = N log(F + p0) + log(1 - (F / (F + p0))^N)
// with log1p/expm1 so neither large N nor F close to F + p0 cancels.
inline double log_bon_mass(double cdf_strict, double p, int n) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (cdf_strict == 0.0) return static_cast<double>(n) * std::log(p);
  const double s = cdf_strict + p;
  const double q = p / s;
  const double tail = -std::expm1(static_cast<double>(n) * std::log1p(-q));
  return static_cast<double>(n) * std::log(s) + std::log(tail);
}

inline BonDistribution exact_bon(const Instance& inst, const RewardOrder& ro,
                                 int n) {
  if (n < 1) throw std::invalid_argument("exact_bon: N must be >= 1");
  check_same_instance(inst.id, ro.instance_id, "exact_bon");
  const std::size_t k = inst.size();
  BonDistribution bon;
  bon.instance_id = inst.id;
  bon.n = n;
  bon.pmf.resize(k);
  bon.log_pmf.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (n == 1) {
      bon.pmf[i] = inst.p0[i];
      bon.log_pmf[i] = std::log(inst.p0[i]);
      continue;
    }
    bon.log_pmf[i] = log_bon_mass(ro.cdf_strict[i], inst.p0[i], n);
    // the order-minimal outcome wins only if all N draws equal it
    bon.pmf[i] = ro.cdf_strict[i] == 0.0 ? std::pow(inst.p0[i], n)
                                         : std::exp(bon.log_pmf[i]);
  }
  return bon;
}

// Runs the Best-of-N procedure `draws` times; returns winner counts.
inline std::vector<std::size_t> sample_bon_counts(const Instance& inst,
                                                  const RewardOrder& ro, int n,
                                                  std::size_t draws,
                                                  std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_bon: N must be >= 1");
  if (draws == 0) throw std::invalid_argument("sample_bon: draws must be >= 1");
  check_same_instance(inst.id, ro.instance_id, "sample_bon");
  const CategoricalSampler sampler(inst.p0);
  Rng rng(seed);
  std::vector<std::size_t> counts(inst.size(), 0);
  for (std::size_t d = 0; d < draws; ++d) {
    std::size_t best = sampler(rng);
    for (int i = 1; i < n; ++i) {
      const std::size_t y = sampler(rng);
      if (ro.rank[y] > ro.rank[best]) best = y;
    }
    ++counts[best];
  }
  return counts;
}

// Empirical pmf of `draws` Best-of-N winners.
inline std::vector<double> sample_bon(const Instance& inst,
                                      const RewardOrder& ro, int n,
                                      std::size_t draws, std::uint64_t seed) {
  const auto counts = sample_bon_counts(inst, ro, n, draws, seed);
  std::vector<double> pmf(counts.size());
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    pmf[i] = static_cast<double>(counts[i]) / static_cast<double>(draws);
  }
  return pmf;
}

inline void to_json(nlohmann::json& j, const BonDistribution& bon) {
  j = nlohmann::json{{"instance_id", bon.instance_id}, {"N", bon.n}, {"pmf", bon.pmf}};
}

}  // namespace bonlab

#endif  // BONLAB_BON_HPP_
