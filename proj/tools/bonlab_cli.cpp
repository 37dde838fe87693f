#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bonlab/runner.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "out";
  std::size_t jobs = 0;  // 0 keeps the config value
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON config file");
  cmd->add_option("--set", flags.overrides, "Override a config entry, key=value (repeatable)");
  cmd->add_option("--out", flags.out, "Output directory")->capture_default_str();
  cmd->add_option("--jobs", flags.jobs, "Worker threads");
}

bonlab::RunConfig resolve(const CommonFlags& flags) {
  nlohmann::json j = bonlab::load_config(flags.config, flags.overrides);
  if (flags.jobs > 0) j["jobs"] = flags.jobs;
  return bonlab::parse_run_config(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-of-N alignment lab: exact BoN laws, variational objectives, sweeps"};
  app.require_subcommand(1);

  CommonFlags derive_flags, sweep_flags, estimate_flags, pareto_flags;
  bool check_oracle = false;
  std::string pareto_input;

  auto* derive = app.add_subcommand("derive", "Exact BoN distributions to bon_pmf.json");
  add_common(derive, derive_flags);
  derive->add_flag("--check-oracle", check_oracle,
                   "Compare against N-tuple enumeration (K <= 6, N <= 4)");

  auto* sweep = app.add_subcommand("sweep", "Method x hyperparameter x seed sweep");
  add_common(sweep, sweep_flags);

  auto* estimate = app.add_subcommand("estimate", "CDF estimation and KS convergence study");
  add_common(estimate, estimate_flags);

  auto* pareto = app.add_subcommand("pareto", "Recompute Pareto fronts from metrics.csv");
  add_common(pareto, pareto_flags);
  pareto->add_option("--input", pareto_input, "metrics.csv to analyze (default OUT/metrics.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? bonlab::kExitOk : bonlab::kExitUsage;
  }

  try {
    if (derive->parsed()) {
      const auto cfg = resolve(derive_flags);
      const auto res = bonlab::cmd_derive(cfg, derive_flags.out, check_oracle);
      std::cout << "wrote " << res.distributions << " distributions to "
                << (std::filesystem::path(derive_flags.out) / "bon_pmf.json").string() << "\n";
      if (check_oracle) {
        std::cout << "oracle: " << res.oracle_checked << " pairs, max TV "
                  << bonlab::exact_number(res.oracle_max_tv) << "\n";
      }
      return bonlab::kExitOk;
    }
    if (sweep->parsed()) {
      const auto cfg = resolve(sweep_flags);
      const auto res = bonlab::cmd_sweep(cfg, sweep_flags.out);
      bonlab::write_sweep_outputs(res.records, sweep_flags.out);
      for (const auto& e : res.errors) std::cerr << "cell failed: " << e << "\n";
      std::cout << "wrote " << res.records.size() << " records ("
                << res.failed_cells << " failed) to " << sweep_flags.out << "\n";
      return res.failed_cells > 0 ? bonlab::kExitPartial : bonlab::kExitOk;
    }
    if (estimate->parsed()) {
      const auto cfg = resolve(estimate_flags);
      const auto rows = bonlab::cmd_estimate(cfg, estimate_flags.out);
      std::cout << bonlab::convergence_csv(rows);
      return bonlab::kExitOk;
    }
    if (pareto->parsed()) {
      resolve(pareto_flags);  // validates flags shared with the other commands
      const std::filesystem::path input =
          pareto_input.empty() ? std::filesystem::path(pareto_flags.out) / "metrics.csv"
                               : std::filesystem::path(pareto_input);
      const auto records = bonlab::cmd_pareto(input, pareto_flags.out);
      std::cout << "re-analyzed " << records.size() << " records\n";
      return bonlab::kExitOk;
    }
  } catch (const bonlab::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bonlab::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bonlab::kExitUsage;
  }
  return bonlab::kExitUsage;
}
