// mmep: Monte Carlo driver for the semi-blind receivers.
//
//   mmep run --config desk.json --out results.csv [--seed N] [--trials N]
//            [--sweep M=8,16,32] [--algorithms kf_m,ep] [--workers N]
//   mmep trace --config desk.json --out trace.txt [--trial N]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure (including
// more than 20% failed trials at some sweep point).

#include "mmep/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct SweepSpec {
  std::string name;
  std::vector<double> values;
};

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw mmep::ConfigError("--sweep expects name=v1,v2,...");
  SweepSpec s;
  s.name = text.substr(0, eq);
  std::stringstream list(text.substr(eq + 1));
  std::string item;
  while (std::getline(list, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw mmep::ConfigError("bad sweep value '" + item + "'");
    s.values.push_back(v);
  }
  if (s.values.empty()) throw mmep::ConfigError("--sweep has no values");
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-blind channel estimation and detection simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, sweep_text, algorithms_text, backend_text;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int workers = 1;

  auto* run = app.add_subcommand("run", "run Monte Carlo trials and write a CSV of metrics");
  run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "output CSV")->required();
  run->add_option("--seed", seed, "master seed (overrides the config)");
  run->add_option("--trials", trials, "trials per sweep point (overrides the config)");
  run->add_option("--sweep", sweep_text, "name=v1,v2,... with name in M, a, T_d, f_d, rho, T_p");
  run->add_option("--algorithms", algorithms_text, "comma separated subset of kf_m,ks_m,ep,kf_tm,ks_tm,pcsi");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  std::size_t trial_index = 0;
  auto* trace = app.add_subcommand("trace", "export the target-cell channel trace of one trial");
  trace->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  trace->add_option("--out", out_path, "output text file")->required();
  trace->add_option("--trial", trial_index, "trial index");
  trace->add_option("--seed", seed, "master seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  mmep::SystemConfig cfg;
  std::optional<SweepSpec> sweep;
  try {
    cfg = mmep::load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    if (trials) cfg.trials = *trials;
    if (!algorithms_text.empty()) cfg.algorithms = mmep::parse_algorithm_list(algorithms_text);
    cfg.validate();
    if (!sweep_text.empty()) sweep = parse_sweep(sweep_text);
  } catch (const mmep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*trace) {
      const mmep::Scenario sc(cfg);
      const mmep::TrialData d = mmep::make_trial_data(sc, trial_index);
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot open " + out_path);
      mmep::write_trace(out, d.traces.front(), cfg.M, cfg.K, cfg.f_d, cfg.rho);
      return out ? 0 : 2;
    }

    const auto rows = sweep ? mmep::run_sweep(cfg, sweep->name, sweep->values, workers)
                            : mmep::run_base(cfg, workers);
    mmep::write_csv(rows, out_path);
    if (mmep::failure_budget_exceeded(rows)) {
      std::cerr << "error: more than 20% of trials failed at some sweep point\n";
      return 2;
    }
  } catch (const mmep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
