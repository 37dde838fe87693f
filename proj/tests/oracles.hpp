// Independent reference computations used only by the test suites.
#ifndef BONLAB_TESTS_ORACLES_HPP_
#define BONLAB_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bonlab/outcome_space.hpp"
#include "bonlab/random.hpp"

namespace bonlab::testing {

inline Instance make_e1() {
  return make_tabular_instance({"a", "b", "c"}, {0.5, 0.3, 0.2}, {1, 2, 3}, "E1");
}

inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

// x ranks above y: larger reward, or equal reward and larger label.
inline bool beats(const Instance& inst, std::size_t x, std::size_t y) {
  if (inst.rewards[x] != inst.rewards[y]) return inst.rewards[x] > inst.rewards[y];
  return inst.outcomes[x] > inst.outcomes[y];
}

// Enumerates all K^N ordered tuples, credits each tuple's probability to its
// winner.
inline std::vector<double> brute_force_bon(const Instance& inst, int n) {
  const std::size_t k = inst.size();
  std::vector<double> pmf(k, 0.0);
  std::vector<std::size_t> tuple(static_cast<std::size_t>(n), 0);
  for (;;) {
    double prob = 1.0;
    std::size_t best = tuple[0];
    for (std::size_t y : tuple) {
      prob *= inst.p0[y];
      if (beats(inst, y, best)) best = y;
    }
    pmf[best] += prob;
    std::size_t pos = 0;
    while (pos < tuple.size() && ++tuple[pos] == k) tuple[pos++] = 0;
    if (pos == tuple.size()) break;
  }
  return pmf;
}

// F(y) by summing p0 over outcomes that lose to y.
inline std::vector<double> brute_force_cdf(const Instance& inst) {
  std::vector<double> f(inst.size(), 0.0);
  for (std::size_t y = 0; y < inst.size(); ++y) {
    for (std::size_t z = 0; z < inst.size(); ++z) {
      if (beats(inst, y, z)) f[y] += inst.p0[z];
    }
  }
  return f;
}

// sum_{i=1}^{N} C(N, i) F^(N-i) p^i
inline double binomial_sum_bon(double f, double p, int n) {
  double acc = 0.0;
  double binom = 1.0;
  for (int i = 1; i <= n; ++i) {
    binom = binom * (n - i + 1) / i;
    acc += binom * std::pow(f, n - i) * std::pow(p, i);
  }
  return acc;
}

inline std::vector<double> central_difference(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), Euclidean; 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

inline std::vector<double> random_logits(Rng& rng, std::size_t k, double scale = 1.0) {
  std::vector<double> v(k);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

// E[log(Binomial(M, F) / M)] summed exactly over the binomial law.
inline double exact_mean_log_estimate(double f, std::size_t m) {
  double acc = 0.0;
  for (std::size_t c = 0; c <= m; ++c) {
    const double log_binom = std::lgamma(m + 1.0) - std::lgamma(c + 1.0) -
                             std::lgamma(m - c + 1.0);
    const double log_prob = log_binom + (c == 0 ? 0.0 : c * std::log(f)) +
                            (m - c == 0 ? 0.0 : (m - c) * std::log1p(-f));
    if (c == 0) {
      if (f < 1.0) return -std::numeric_limits<double>::infinity();
      continue;
    }
    acc += std::exp(log_prob) * std::log(static_cast<double>(c) / m);
  }
  return acc;
}

// Same expectation conditioned on the estimate being positive.
inline double exact_mean_log_estimate_given_positive(double f, std::size_t m) {
  double acc = 0.0;
  double mass = 0.0;
  for (std::size_t c = 1; c <= m; ++c) {
    const double log_binom = std::lgamma(m + 1.0) - std::lgamma(c + 1.0) -
                             std::lgamma(m - c + 1.0);
    const double prob = std::exp(log_binom + c * std::log(f) +
                                 (m - c == 0 ? 0.0 : (m - c) * std::log1p(-f)));
    acc += prob * std::log(static_cast<double>(c) / m);
    mass += prob;
  }
  return acc / mass;
}

}  // namespace bonlab::testing

#endif  // BONLAB_TESTS_ORACLES_HPP_
