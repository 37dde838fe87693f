#ifndef BONLAB_OUTCOME_SPACE_HPP_
#define BONLAB_OUTCOME_SPACE_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bonlab/random.hpp"
#include "json.hpp"

namespace bonlab {

inline constexpr std::size_t kDefaultOutcomeCap = 4096;

// One prompt: a finite outcome space with reference distribution p0 and a
// reward per outcome. Immutable once validated.
struct Instance {
  std::string id;
  std::vector<std::string> outcomes;
  std::vector<double> p0;
  std::vector<double> rewards;

  std::size_t size() const { return outcomes.size(); }
};

struct InstanceSet {
  std::vector<Instance> instances;
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument describing the first violated invariant.
inline void validate_instance(const Instance& inst,
                              std::size_t cap = kDefaultOutcomeCap) {
  const std::size_t k = inst.outcomes.size();
  if (k == 0) throw std::invalid_argument("instance '" + inst.id + "': no outcomes");
  if (k > cap) {
    throw std::invalid_argument("instance '" + inst.id +
                                "': outcome count exceeds cap " +
                                std::to_string(cap));
  }
  if (inst.p0.size() != k || inst.rewards.size() != k) {
    throw std::invalid_argument("instance '" + inst.id +
                                "': dimension mismatch between outcomes, p0 "
                                "and rewards");
  }
  double total = 0.0;
  for (double p : inst.p0) {
    if (!std::isfinite(p) || p < 0.0) {
      throw std::invalid_argument("instance '" + inst.id +
                                  "': negative or non-finite probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("instance '" + inst.id +
                                "': p0 does not sum to 1");
  }
  for (double r : inst.rewards) {
    if (!std::isfinite(r)) {
      throw std::invalid_argument("instance '" + inst.id +
                                  "': non-finite reward");
    }
  }
  std::set<std::string> seen;
  for (const auto& label : inst.outcomes) {
    if (!seen.insert(label).second) {
      throw std::invalid_argument("instance '" + inst.id +
                                  "': duplicate outcome label '" + label + "'");
    }
  }
}

// Builds a validated instance. p0 must sum to 1 within 1e-9 and is
// renormalized so the stored vector sums to 1 within 1e-12.
inline Instance make_tabular_instance(std::vector<std::string> labels,
                                      std::vector<double> p0,
                                      std::vector<double> rewards,
                                      std::string id = "instance") {
  if (labels.size() != p0.size() || labels.size() != rewards.size()) {
    throw std::invalid_argument("make_tabular_instance: dimension mismatch");
  }
  double total = 0.0;
  for (double p : p0) {
    if (!std::isfinite(p) || p < 0.0) {
      throw std::invalid_argument("make_tabular_instance: negative probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("make_tabular_instance: p0 sums to " +
                                std::to_string(total) + ", expected 1");
  }
  if (total != 1.0) {
    for (double& p : p0) p /= total;
  }
  Instance inst{std::move(id), std::move(labels), std::move(p0),
                std::move(rewards)};
  validate_instance(inst);
  return inst;
}

enum class RewardLaw { kUniform01, kGaussian, kPeakedNegative };

inline std::string to_string(RewardLaw law) {
  switch (law) {
    case RewardLaw::kUniform01: return "uniform01";
    case RewardLaw::kGaussian: return "gaussian";
    case RewardLaw::kPeakedNegative: return "peaked-negative";
  }
  return "?";
}

inline RewardLaw parse_reward_law(const std::string& s) {
  if (s == "uniform01") return RewardLaw::kUniform01;
  if (s == "gaussian") return RewardLaw::kGaussian;
  if (s == "peaked-negative" || s == "peaked_negative") {
    return RewardLaw::kPeakedNegative;
  }
  throw std::invalid_argument("unknown reward law '" + s + "'");
}

struct KRange {
  std::size_t min = 2;
  std::size_t max = 16;
};

inline std::string outcome_label(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "o%02zu", k);
  return buf;
}

namespace detail {

// Uniform point on the probability simplex.
inline std::vector<double> sample_simplex(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& x : w) {
    x = rng.exponential();
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

inline Instance generate_one(Rng& rng, std::size_t k, RewardLaw law,
                             std::string id) {
  std::vector<std::string> labels(k);
  for (std::size_t i = 0; i < k; ++i) labels[i] = outcome_label(i);
  std::vector<double> p0;
  std::vector<double> rewards(k);
  switch (law) {
    case RewardLaw::kUniform01:
      p0 = sample_simplex(rng, k);
      for (auto& r : rewards) r = rng.uniform();
      break;
    case RewardLaw::kGaussian:
      p0 = sample_simplex(rng, k);
      for (auto& r : rewards) r = rng.normal();
      break;
    case RewardLaw::kPeakedNegative: {
      // A dominant low-reward outcome holding at least half of p0; the
      // remaining rewards are skewed down towards the minimum.
      const std::size_t low = rng.uniform_index(0, k - 1);
      const double low_mass = 0.5 + 0.45 * rng.uniform();
      auto rest = sample_simplex(rng, k - 1);
      p0.assign(k, 0.0);
      std::size_t j = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (i == low) {
          p0[i] = low_mass;
          rewards[i] = 0.0;
        } else {
          p0[i] = (1.0 - low_mass) * rest[j++];
          const double u = rng.uniform_open_low();
          rewards[i] = u * u * u * u;
        }
      }
      break;
    }
  }
  double total = 0.0;
  for (double p : p0) total += p;
  for (double& p : p0) p /= total;
  return make_tabular_instance(std::move(labels), std::move(p0),
                               std::move(rewards), std::move(id));
}

}  // namespace detail

// Deterministic synthetic prompt set. Each instance draws its own support
// size in k_range and a uniform point on the simplex for p0.
inline InstanceSet generate_random_instances(std::size_t count, KRange k_range,
                                             RewardLaw law,
                                             std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("generate_random_instances: count must be >= 1");
  if (k_range.min < 2 || k_range.max > 64 || k_range.min > k_range.max) {
    throw std::invalid_argument(
        "generate_random_instances: K range must lie within [2, 64]");
  }
  InstanceSet set;
  set.seed = seed;
  set.instances.reserve(count);
  Rng rng(SeedHasher().add(seed).add("instances").add(to_string(law)).value());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = rng.uniform_index(k_range.min, k_range.max);
    char id[32];
    std::snprintf(id, sizeof(id), "inst%04zu", i);
    set.instances.push_back(detail::generate_one(rng, k, law, id));
  }
  return set;
}

// JSON: {id, outcomes, p0, rewards}
inline void to_json(nlohmann::json& j, const Instance& inst) {
  j = nlohmann::json{{"id", inst.id},
                     {"outcomes", inst.outcomes},
                     {"p0", inst.p0},
                     {"rewards", inst.rewards}};
}

inline void from_json(const nlohmann::json& j, Instance& inst) {
  inst = make_tabular_instance(j.at("outcomes").get<std::vector<std::string>>(),
                               j.at("p0").get<std::vector<double>>(),
                               j.at("rewards").get<std::vector<double>>(),
                               j.at("id").get<std::string>());
}

// JSON: {seed, instances: [...]}
inline void to_json(nlohmann::json& j, const InstanceSet& set) {
  j = nlohmann::json{{"seed", set.seed}, {"instances", set.instances}};
}

inline void from_json(const nlohmann::json& j, InstanceSet& set) {
  set.seed = j.value("seed", std::uint64_t{0});
  set.instances = j.at("instances").get<std::vector<Instance>>();
  std::set<std::string> ids;
  for (const auto& inst : set.instances) {
    if (!ids.insert(inst.id).second) {
      throw std::invalid_argument("instance set: duplicate id '" + inst.id + "'");
    }
  }
}

}  // namespace bonlab

#endif  // BONLAB_OUTCOME_SPACE_HPP_
