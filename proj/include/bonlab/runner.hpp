#ifndef BONLAB_RUNNER_HPP_
#define BONLAB_RUNNER_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/analysis.hpp"
#include "bonlab/bon.hpp"
#include "bonlab/cdf_estimation.hpp"
#include "bonlab/objectives.hpp"
#include "bonlab/optimizer.hpp"
#include "bonlab/outcome_space.hpp"
#include "bonlab/parallel.hpp"
#include "bonlab/random.hpp"
#include "bonlab/reward_order.hpp"
#include "json.hpp"

namespace bonlab {

// Bad configuration or command line; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitPartial = 2;

inline nlohmann::json default_config() {
  return nlohmann::json::parse(R"({
    "instances": {
      "source": "generate",
      "path": "",
      "count": 100,
      "k_min": 2,
      "k_max": 16,
      "reward_law": "uniform01",
      "seed": 0
    },
    "methods": ["vbon", "l1", "l2", "kl_rl", "bon_sft", "bon_exact"],
    "n_grid": [1, 2, 3, 4, 8, 16, 32, 64, 128, 256, 512],
    "beta_grid": [0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 1, 2, 3, 4, 5],
    "seeds": [0, 1, 2],
    "master_seed": 0,
    "objective": {"cdf_floor": 1e-8, "l1_preset": "jensen"},
    "optimizer": {
      "step_size": 0.1,
      "max_steps": 5000,
      "tolerance": 1e-9,
      "mode": "exact_gradient",
      "batch": 256,
      "direction": "natural",
      "init": "reference",
      "cdf_samples": 250
    },
    "bon_sft": {"sample_count": 1000, "smoothing": 0.5},
    "estimate": {
      "m_grid": [5, 20, 100, 200, 250],
      "reference_m": 600,
      "trace_m_grid": [10, 20, 50, 100, 200, 300, 400, 500, 600],
      "seed": 0
    },
    "write_traces": false,
    "jobs": 1
  })");
}

namespace detail {

inline std::vector<std::string> split_path(const std::string& key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = key.find('.', start);
    parts.push_back(key.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (const auto& p : parts) {
    if (p.empty()) throw UsageError("malformed config key '" + key + "'");
  }
  return parts;
}

// Recursively overlays `patch` onto `base`; keys absent from `base` are
// rejected so that typos surface as usage errors.
inline void overlay(nlohmann::json& base, const nlohmann::json& patch,
                    const std::string& where) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw UsageError("unknown config key '" + key + "'");
    nlohmann::json& slot = base[it.key()];
    if (slot.is_object()) {
      if (!it.value().is_object()) {
        throw UsageError("config key '" + key + "' must be an object");
      }
      overlay(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

}  // namespace detail

// Applies one `key=value` override. The value is read as JSON when it parses,
// otherwise as a plain string.
inline void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw UsageError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  const auto parts = detail::split_path(key);
  nlohmann::json* node = &cfg;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) {
      throw UsageError("unknown config key '" + key + "'");
    }
    node = &(*node)[parts[i]];
  }
  if (node->is_object()) throw UsageError("config key '" + key + "' is a section");
  *node = std::move(value);
}

inline nlohmann::json load_config(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  nlohmann::json cfg = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    nlohmann::json file = nlohmann::json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object()) {
      throw UsageError("config '" + path + "' is not a JSON object");
    }
    detail::overlay(cfg, file, "");
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

struct InstanceSource {
  std::string source = "generate";
  std::string path;
  std::size_t count = 100;
  KRange k_range;
  RewardLaw law = RewardLaw::kUniform01;
  std::uint64_t seed = 0;
};

struct RunConfig {
  InstanceSource instances;
  std::vector<std::string> methods;
  std::vector<int> n_grid;
  std::vector<double> beta_grid;
  std::vector<std::uint64_t> seeds;
  std::uint64_t master_seed = 0;
  double cdf_floor = 1e-8;
  L1Preset l1_preset = L1Preset::kJensen;
  OptimizerConfig optimizer;
  std::size_t sft_samples = 1000;
  double sft_smoothing = 0.5;
  std::vector<std::size_t> m_grid;
  std::size_t reference_m = 600;
  std::vector<std::size_t> trace_m_grid;
  std::uint64_t estimate_seed = 0;
  bool write_traces = false;
  std::size_t jobs = 1;
};

inline const std::set<std::string>& known_methods() {
  static const std::set<std::string> names = {"vbon", "l1", "l2", "kl_rl", "bon_sft",
                                              "bon_exact"};
  return names;
}

inline bool uses_beta(const std::string& method) { return method == "kl_rl"; }

inline RunConfig parse_run_config(const nlohmann::json& j) {
  try {
    RunConfig c;
    const auto& src = j.at("instances");
    c.instances.source = src.at("source").get<std::string>();
    if (c.instances.source != "generate" && c.instances.source != "file") {
      throw UsageError("instances.source must be 'generate' or 'file'");
    }
    c.instances.path = src.at("path").get<std::string>();
    c.instances.count = src.at("count").get<std::size_t>();
    c.instances.k_range = {src.at("k_min").get<std::size_t>(),
                           src.at("k_max").get<std::size_t>()};
    c.instances.law = parse_reward_law(src.at("reward_law").get<std::string>());
    c.instances.seed = src.at("seed").get<std::uint64_t>();
    c.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& m : c.methods) {
      if (!known_methods().count(m)) throw UsageError("unknown method '" + m + "'");
    }
    c.n_grid = j.at("n_grid").get<std::vector<int>>();
    for (int n : c.n_grid) {
      if (n < 1) throw UsageError("n_grid entries must be >= 1");
    }
    c.beta_grid = j.at("beta_grid").get<std::vector<double>>();
    for (double b : c.beta_grid) {
      if (!(b > 0.0)) throw UsageError("beta_grid entries must be > 0");
    }
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    const auto& obj = j.at("objective");
    c.cdf_floor = obj.at("cdf_floor").get<double>();
    const std::string preset = obj.at("l1_preset").get<std::string>();
    if (preset == "jensen") {
      c.l1_preset = L1Preset::kJensen;
    } else if (preset == "simplified") {
      c.l1_preset = L1Preset::kSimplified;
    } else {
      throw UsageError("objective.l1_preset must be 'jensen' or 'simplified'");
    }
    const auto& o = j.at("optimizer");
    c.optimizer.step_size = o.at("step_size").get<double>();
    c.optimizer.max_steps = o.at("max_steps").get<int>();
    c.optimizer.tolerance = o.at("tolerance").get<double>();
    const std::string mode = o.at("mode").get<std::string>();
    if (mode == "exact_gradient") {
      c.optimizer.mode = OptimizerMode::kExactGradient;
    } else if (mode == "sampled") {
      c.optimizer.mode = OptimizerMode::kSampled;
    } else {
      throw UsageError("optimizer.mode must be 'exact_gradient' or 'sampled'");
    }
    c.optimizer.batch = o.at("batch").get<std::size_t>();
    const std::string dir = o.at("direction").get<std::string>();
    if (dir != "natural" && dir != "euclidean") {
      throw UsageError("optimizer.direction must be 'natural' or 'euclidean'");
    }
    c.optimizer.direction =
        dir == "natural" ? AscentDirection::kNatural : AscentDirection::kEuclidean;
    const std::string init = o.at("init").get<std::string>();
    if (init != "reference" && init != "uniform") {
      throw UsageError("optimizer.init must be 'reference' or 'uniform'");
    }
    c.optimizer.init = init == "reference" ? InitPolicy::kReference : InitPolicy::kUniform;
    c.optimizer.cdf_samples = o.at("cdf_samples").get<std::size_t>();
    c.optimizer.validate();
    c.sft_samples = j.at("bon_sft").at("sample_count").get<std::size_t>();
    c.sft_smoothing = j.at("bon_sft").at("smoothing").get<double>();
    const auto& est = j.at("estimate");
    c.m_grid = est.at("m_grid").get<std::vector<std::size_t>>();
    c.reference_m = est.at("reference_m").get<std::size_t>();
    c.trace_m_grid = est.at("trace_m_grid").get<std::vector<std::size_t>>();
    c.estimate_seed = est.at("seed").get<std::uint64_t>();
    c.write_traces = j.at("write_traces").get<bool>();
    c.jobs = j.at("jobs").get<std::size_t>();
    if (c.jobs == 0) throw UsageError("jobs must be >= 1");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
}

inline InstanceSet load_instances(const InstanceSource& src) {
  if (src.source == "file") {
    std::ifstream in(src.path);
    if (!in) throw UsageError("cannot open instance file '" + src.path + "'");
    try {
      return nlohmann::json::parse(in).get<InstanceSet>();
    } catch (const std::exception& e) {
      throw UsageError("instance file '" + src.path + "': " + e.what());
    }
  }
  try {
    return generate_random_instances(src.count, src.k_range, src.law, src.seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// Shortest decimal that round-trips; empty for NaN.
inline std::string exact_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- derive

inline constexpr std::size_t kOracleMaxOutcomes = 6;
inline constexpr int kOracleMaxN = 4;

// N-tuple enumeration of the BoN winner law, credited to the winner under
// the reward order.
inline std::vector<double> enumerate_bon(const Instance& inst, const RewardOrder& ro,
                                         int n) {
  const std::size_t k = inst.size();
  std::vector<double> pmf(k, 0.0);
  std::vector<std::size_t> tuple(static_cast<std::size_t>(n), 0);
  for (;;) {
    double prob = 1.0;
    std::size_t best = tuple[0];
    for (std::size_t y : tuple) {
      prob *= inst.p0[y];
      if (ro.rank[y] > ro.rank[best]) best = y;
    }
    pmf[best] += prob;
    std::size_t pos = 0;
    while (pos < tuple.size() && ++tuple[pos] == k) tuple[pos++] = 0;
    if (pos == tuple.size()) break;
  }
  return pmf;
}

struct DeriveResult {
  std::size_t distributions = 0;
  std::size_t oracle_checked = 0;
  double oracle_max_tv = 0.0;
};

// Writes bon_pmf.json. With check_oracle, every (instance, N) pair within
// the enumeration caps is compared against brute force.
inline DeriveResult cmd_derive(const RunConfig& cfg, const std::filesystem::path& out,
                               bool check_oracle) {
  if (cfg.n_grid.empty()) throw UsageError("derive: n_grid is empty");
  const InstanceSet set = load_instances(cfg.instances);
  DeriveResult res;
  nlohmann::json dists = nlohmann::json::array();
  for (const auto& inst : set.instances) {
    const RewardOrder ro = build_order(inst);
    for (int n : cfg.n_grid) {
      const BonDistribution bon = exact_bon(inst, ro, n);
      dists.push_back(bon);
      ++res.distributions;
      if (check_oracle && inst.size() <= kOracleMaxOutcomes && n <= kOracleMaxN) {
        const auto brute = enumerate_bon(inst, ro, n);
        double tv = 0.0;
        for (std::size_t i = 0; i < brute.size(); ++i) tv += std::abs(brute[i] - bon.pmf[i]);
        res.oracle_max_tv = std::max(res.oracle_max_tv, 0.5 * tv);
        ++res.oracle_checked;
      }
    }
  }
  if (check_oracle && res.oracle_checked == 0) {
    throw UsageError("derive: --check-oracle needs an instance with K <= " +
                     std::to_string(kOracleMaxOutcomes) + " and N <= " +
                     std::to_string(kOracleMaxN));
  }
  nlohmann::json doc = {{"distributions", dists}};
  if (check_oracle) {
    doc["oracle"] = {{"checked", res.oracle_checked}, {"max_tv", res.oracle_max_tv}};
  }
  write_file(out / "bon_pmf.json", doc.dump(1) + "\n");
  return res;
}

// ---------------------------------------------------------------- sweep

struct CellResult {
  MetricRecord record;
  std::vector<std::string> errors;
};

struct SweepResult {
  std::vector<MetricRecord> records;  // sorted by (method, hyperparameter, seed)
  std::vector<std::string> errors;
  std::size_t failed_cells = 0;
};

inline std::uint64_t cell_seed(std::uint64_t master, const std::string& method,
                               std::size_t hyper_index, std::size_t seed_index,
                               const std::string& instance_id) {
  return SeedHasher()
      .add(master)
      .add(method)
      .add(static_cast<std::uint64_t>(hyper_index))
      .add(static_cast<std::uint64_t>(seed_index))
      .add(instance_id)
      .value();
}

struct InstanceRun {
  std::vector<double> pmf;
  OptimizationTrace trace;
  bool has_trace = false;
};

inline InstanceRun run_method(const RunConfig& cfg, const std::string& method,
                              double hyper, const Instance& inst, const RewardOrder& ro,
                              std::uint64_t seed) {
  InstanceRun run;
  const int n = static_cast<int>(hyper);
  if (method == "bon_exact") {
    run.pmf = exact_bon(inst, ro, n).pmf;
    return run;
  }
  if (method == "bon_sft") {
    run.pmf = bon_sft(inst, ro, n, cfg.sft_samples, cfg.sft_smoothing, seed).pmf();
    return run;
  }
  OptimizerConfig oc = cfg.optimizer;
  oc.seed = seed;
  ObjectiveSpec spec;
  spec.kind = parse_objective_kind(method);
  spec.cdf_floor = cfg.cdf_floor;
  spec.l1_preset = cfg.l1_preset;
  if (uses_beta(method)) {
    spec.beta = hyper;
  } else {
    spec.n = n;
  }
  run.trace = optimize(inst, ro, spec, oc);
  run.has_trace = true;
  run.pmf = run.trace.final_policy.pmf();
  for (double p : run.pmf) {
    if (!std::isfinite(p)) throw std::runtime_error("optimizer diverged (non-finite policy)");
  }
  if (!std::isfinite(run.trace.records.back().value)) {
    throw std::runtime_error("optimizer diverged (non-finite objective)");
  }
  return run;
}

inline std::string hyper_label(double h) { return exact_number(h); }

inline SweepResult cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out) {
  if (cfg.methods.empty()) throw UsageError("sweep: method list is empty");
  if (cfg.seeds.empty()) throw UsageError("sweep: seed list is empty");
  struct Cell {
    std::string method;
    std::size_t hyper_index;
    double hyper;
    std::size_t seed_index;
  };
  std::vector<Cell> cells;
  for (const auto& m : cfg.methods) {
    const auto& grid_n = cfg.n_grid;
    if (uses_beta(m) ? cfg.beta_grid.empty() : grid_n.empty()) {
      throw UsageError("sweep: empty hyperparameter grid for method '" + m + "'");
    }
    const std::size_t count = uses_beta(m) ? cfg.beta_grid.size() : grid_n.size();
    for (std::size_t h = 0; h < count; ++h) {
      const double hyper = uses_beta(m) ? cfg.beta_grid[h] : static_cast<double>(grid_n[h]);
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) cells.push_back({m, h, hyper, s});
    }
  }
  const InstanceSet set = load_instances(cfg.instances);
  std::vector<RewardOrder> orders;
  orders.reserve(set.instances.size());
  for (const auto& inst : set.instances) orders.push_back(build_order(inst));

  std::vector<CellResult> results(cells.size());
  std::mutex trace_mutex;
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t c) {
    const Cell& cell = cells[c];
    CellResult& res = results[c];
    res.record.method = cell.method;
    res.record.hyperparameter = cell.hyper;
    res.record.seed = cfg.seeds[cell.seed_index];
    double kl = 0.0, reward = 0.0, win = 0.0;
    for (std::size_t i = 0; i < set.instances.size(); ++i) {
      const Instance& inst = set.instances[i];
      const std::uint64_t seed = cell_seed(cfg.master_seed, cell.method,
                                           cell.hyper_index, cell.seed_index, inst.id);
      try {
        const InstanceRun run = run_method(cfg, cell.method, cell.hyper, inst, orders[i], seed);
        kl += kl_divergence(run.pmf, inst.p0);
        reward += expected_reward(run.pmf, inst.rewards);
        win += win_rate(run.pmf, inst.p0, orders[i]);
        if (cfg.write_traces && run.has_trace) {
          const std::string name = cell.method + "_" + hyper_label(cell.hyper) + "_" +
                                   std::to_string(res.record.seed) + "_" + inst.id + ".jsonl";
          const std::string text = trace_jsonl(run.trace);
          std::lock_guard<std::mutex> lock(trace_mutex);
          write_file(out / "traces" / name, text);
        }
      } catch (const std::exception& e) {
        res.errors.push_back(cell.method + " hyper=" + hyper_label(cell.hyper) +
                             " seed=" + std::to_string(res.record.seed) + " instance " +
                             inst.id + ": " + e.what());
      }
    }
    const double count = static_cast<double>(set.instances.size());
    if (res.errors.empty()) {
      res.record.kl_to_p0 = kl / count;
      res.record.expected_reward = reward / count;
      res.record.win_rate = win / count;
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      res.record.kl_to_p0 = res.record.expected_reward = res.record.win_rate = nan;
      res.record.status = "failed";
    }
  });

  SweepResult sweep;
  for (auto& r : results) {
    if (!r.record.ok()) ++sweep.failed_cells;
    sweep.records.push_back(r.record);
    for (auto& e : r.errors) sweep.errors.push_back(std::move(e));
  }
  std::stable_sort(sweep.records.begin(), sweep.records.end(),
                   [](const MetricRecord& a, const MetricRecord& b) {
                     if (a.method != b.method) return a.method < b.method;
                     if (a.hyperparameter != b.hyperparameter) {
                       return a.hyperparameter < b.hyperparameter;
                     }
                     return a.seed < b.seed;
                   });
  return sweep;
}

inline std::string metrics_csv(std::span<const MetricRecord> records) {
  std::string out =
      "method,hyperparam,seed,kl,expected_reward,win_rate,on_front_winrate,on_front_reward,"
      "status\n";
  if (records.empty()) return out;
  const auto by_win = pareto_front(records, FrontAxis::kWinRate);
  const auto by_reward = pareto_front(records, FrontAxis::kExpectedReward);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out += r.method + "," + exact_number(r.hyperparameter) + "," + std::to_string(r.seed) +
           "," + exact_number(r.kl_to_p0) + "," + exact_number(r.expected_reward) + "," +
           exact_number(r.win_rate) + "," + (by_win.points[i].on_front ? "1" : "0") + "," +
           (by_reward.points[i].on_front ? "1" : "0") + "," + r.status + "\n";
  }
  return out;
}

inline nlohmann::json front_summary(std::span<const MetricRecord> records) {
  nlohmann::json doc = nlohmann::json::object();
  for (FrontAxis axis : {FrontAxis::kWinRate, FrontAxis::kExpectedReward}) {
    const auto res = pareto_front(records, axis);
    doc[to_string(axis)] = {{"front_size", res.front_size},
                            {"method_share_percent", res.method_share}};
  }
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok() ? 0 : 1;
  doc["records"] = records.size();
  doc["failed_records"] = failed;
  return doc;
}

inline void write_sweep_outputs(std::span<const MetricRecord> records,
                                const std::filesystem::path& out) {
  write_file(out / "metrics.csv", metrics_csv(records));
  write_file(out / "front_summary.json", front_summary(records).dump(1) + "\n");
}

// ---------------------------------------------------------------- pareto

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_csv_number(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

inline std::vector<MetricRecord> parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw UsageError("metrics.csv: empty file");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"method", "hyperparam", "seed", "kl", "expected_reward", "win_rate"}) {
    if (!col.count(need)) throw UsageError(std::string("metrics.csv: missing column ") + need);
  }
  std::vector<MetricRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw UsageError("metrics.csv line " + std::to_string(lineno) + ": wrong field count");
    }
    try {
      MetricRecord r;
      r.method = f[col["method"]];
      r.hyperparameter = parse_csv_number(f[col["hyperparam"]]);
      r.seed = std::stoull(f[col["seed"]]);
      r.kl_to_p0 = parse_csv_number(f[col["kl"]]);
      r.expected_reward = parse_csv_number(f[col["expected_reward"]]);
      r.win_rate = parse_csv_number(f[col["win_rate"]]);
      if (col.count("status")) r.status = f[col["status"]];
      records.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw UsageError("metrics.csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (records.empty()) throw UsageError("metrics.csv: no records");
  return records;
}

// Re-derives the front markers and summary for an existing metrics.csv.
inline std::vector<MetricRecord> cmd_pareto(const std::filesystem::path& input,
                                            const std::filesystem::path& out) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + input.string() + "'");
  std::vector<MetricRecord> records = parse_metrics_csv(in);
  in.close();
  write_sweep_outputs(records, out);
  return records;
}

// ---------------------------------------------------------------- estimate

struct Showcase {
  std::string name;
  Instance instance;
};

// Adversarial, neutral and positive analogues: a dominant lowest-reward
// outcome, Gaussian rewards, and a dominant highest-reward outcome.
inline std::vector<Showcase> showcase_instances(std::uint64_t seed) {
  std::vector<Showcase> out;
  Instance adv =
      generate_random_instances(1, {12, 12}, RewardLaw::kPeakedNegative, seed).instances[0];
  adv.id = "adversarial";
  Instance neutral =
      generate_random_instances(1, {12, 12}, RewardLaw::kGaussian, seed).instances[0];
  neutral.id = "neutral";
  Instance positive =
      generate_random_instances(1, {12, 12}, RewardLaw::kPeakedNegative, seed + 1).instances[0];
  positive.id = "positive";
  for (double& r : positive.rewards) r = 1.0 - r;
  out.push_back({"adversarial", adv});
  out.push_back({"neutral", neutral});
  out.push_back({"positive", positive});
  return out;
}

inline std::string cdf_traces_csv(const std::vector<Showcase>& showcases,
                                  std::span<const std::size_t> m_grid, std::uint64_t seed) {
  std::string out = "showcase,M,outcome,reward,f_true,f_hat\n";
  for (const auto& sc : showcases) {
    const RewardOrder ro = build_order(sc.instance);
    const std::uint64_t s = estimation_seed(seed, sc.instance.id);
    for (std::size_t m : m_grid) {
      const EstimatedCdf est = estimate_cdf(sc.instance, ro, m, s);
      for (std::size_t idx : ro.order) {
        out += sc.name + "," + std::to_string(m) + "," + sc.instance.outcomes[idx] + "," +
               exact_number(sc.instance.rewards[idx]) + "," +
               exact_number(ro.cdf_strict[idx]) + "," + exact_number(est.f_hat[idx]) + "\n";
      }
    }
  }
  return out;
}

inline std::vector<ConvergenceRow> cmd_estimate(const RunConfig& cfg,
                                                const std::filesystem::path& out) {
  if (cfg.m_grid.empty()) throw UsageError("estimate: m_grid is empty");
  for (std::size_t m : cfg.m_grid) {
    if (m == 0) throw UsageError("estimate: m_grid entries must be >= 1");
  }
  const std::size_t max_m = *std::max_element(cfg.m_grid.begin(), cfg.m_grid.end());
  if (cfg.reference_m < max_m) {
    throw UsageError("estimate: reference_m must be at least the largest M in m_grid");
  }
  for (std::size_t m : cfg.trace_m_grid) {
    if (m == 0) throw UsageError("estimate: trace_m_grid entries must be >= 1");
  }
  const InstanceSet set = load_instances(cfg.instances);
  const auto rows = convergence_study(set, cfg.m_grid, cfg.reference_m, cfg.estimate_seed,
                                      cfg.jobs);
  write_file(out / "ks_table.csv", convergence_csv(rows));
  write_file(out / "cdf_traces.csv",
             cdf_traces_csv(showcase_instances(cfg.estimate_seed), cfg.trace_m_grid,
                            cfg.estimate_seed));
  return rows;
}

}  // namespace bonlab

#endif  // BONLAB_RUNNER_HPP_
