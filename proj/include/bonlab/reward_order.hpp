#ifndef BONLAB_REWARD_ORDER_HPP_
#define BONLAB_REWARD_ORDER_HPP_

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/outcome_space.hpp"
#include "json.hpp"

namespace bonlab {

// Strict total order on the outcomes of one instance: ascending reward, ties
// broken by ascending label. cdf_strict[k] is the p0-mass ranked strictly
// below outcome k; cdf_inclusive[k] adds p0[k] itself. All vectors except
// `order` are indexed by outcome.
struct RewardOrder {
  std::string instance_id;
  std::vector<std::size_t> order;  // outcome indices, lowest first
  std::vector<std::size_t> rank;   // inverse permutation of `order`
  std::vector<std::size_t> level;  // dense rank of the reward value (ties share)
  std::vector<double> cdf_strict;
  std::vector<double> cdf_inclusive;

  std::size_t size() const { return order.size(); }
  std::size_t minimal() const { return order.front(); }
  std::size_t maximal() const { return order.back(); }
};

inline RewardOrder build_order(const Instance& inst) {
  const std::size_t k = inst.size();
  RewardOrder ro;
  ro.instance_id = inst.id;
  ro.order.resize(k);
  std::iota(ro.order.begin(), ro.order.end(), std::size_t{0});
  std::sort(ro.order.begin(), ro.order.end(),
            [&](std::size_t a, std::size_t b) {
              if (inst.rewards[a] < inst.rewards[b]) return true;
              if (inst.rewards[b] < inst.rewards[a]) return false;
              return inst.outcomes[a] < inst.outcomes[b];
            });
  ro.rank.resize(k);
  ro.level.resize(k);
  ro.cdf_strict.resize(k);
  ro.cdf_inclusive.resize(k);
  double below = 0.0;
  std::size_t level = 0;
  for (std::size_t pos = 0; pos < k; ++pos) {
    const std::size_t idx = ro.order[pos];
    if (pos > 0 && inst.rewards[ro.order[pos - 1]] < inst.rewards[idx]) ++level;
    ro.rank[idx] = pos;
    ro.level[idx] = level;
    ro.cdf_strict[idx] = below;
    below += inst.p0[idx];
    ro.cdf_inclusive[idx] = below;
  }
  return ro;
}

inline double cdf_at(const RewardOrder& ro, std::size_t outcome) {
  if (outcome >= ro.size()) {
    throw std::out_of_range("cdf_at: outcome index " + std::to_string(outcome) +
                            " out of range");
  }
  return ro.cdf_strict[outcome];
}

inline void to_json(nlohmann::json& j, const RewardOrder& ro) {
  j = nlohmann::json{{"instance_id", ro.instance_id},
                     {"order", ro.order},
                     {"cdf_strict", ro.cdf_strict},
                     {"cdf_inclusive", ro.cdf_inclusive}};
}

}  // namespace bonlab

#endif  // BONLAB_REWARD_ORDER_HPP_
