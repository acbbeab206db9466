#include "mmep/harness.hpp"

#include "mmep/kron.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mmep {

std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t cell, StreamTag tag) {
  return mix64(mix64(mix64(mix64(master) ^ trial) ^ cell) ^ static_cast<std::uint64_t>(tag));
}

double delta_h_ratio(const ChannelTrace& truth, const std::vector<CVector>& estimate) {
  if (truth.length() != estimate.size()) throw std::invalid_argument("delta_h: length mismatch");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t t = 0; t < estimate.size(); ++t) {
    const double power = truth.h[t].squaredNorm();
    if (power == 0.0) {
      std::cerr << "warning: zero-norm channel at t=" << t + 1 << " excluded from delta_h\n";
      continue;
    }
    sum += (truth.h[t] - estimate[t]).squaredNorm() / power;
    ++used;
  }
  return used ? sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
}

double ratio_to_db(double ratio) {
  if (std::isnan(ratio)) return ratio;
  constexpr double kFloorDb = -300.0;
  if (ratio <= 0.0) return kFloorDb;
  return std::max(kFloorDb, 10.0 * std::log10(ratio));
}

double delta_h_db(const ChannelTrace& truth, const std::vector<CVector>& estimate) {
  return ratio_to_db(delta_h_ratio(truth, estimate));
}

double ser(const SymbolMatrix& truth, const SymbolMatrix& decisions) {
  if (truth.rows() != decisions.rows() || truth.cols() != decisions.cols())
    throw std::invalid_argument("ser: shape mismatch");
  if (truth.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  Eigen::Index errors = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      if (truth(i, j) != decisions(i, j)) ++errors;
  return static_cast<double>(errors) / static_cast<double>(truth.size());
}

Scenario::Scenario(const SystemConfig& config)
    : cfg(config),
      model(build_model(config)),
      interferer_model(build_interferer_model(config)),
      blocks(BlockModel::select(model, config.backend)),
      constellation(make_constellation(4, config.symbol_energy())) {}

TrialData make_trial_data(const Scenario& sc, std::size_t trial_index) {
  const SystemConfig& cfg = sc.cfg;
  const int T = cfg.frame_length();
  const bool explicit_mode = cfg.interference_mode == InterferenceMode::explicit_sum;
  const std::size_t cells = explicit_mode ? static_cast<std::size_t>(cfg.L) : 1;

  TrialData d;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    Rng ch(derive_seed(cfg.master_seed, trial_index, cell, StreamTag::channel));
    Rng sy(derive_seed(cfg.master_seed, trial_index, cell, StreamTag::symbols));
    const ChannelModel& m = cell == 0 ? sc.model : sc.interferer_model;
    d.traces.push_back(simulate_trace(m, T, ch));
    if (cell == 0) {
      d.frame.pilots = make_pilots(cfg.pilot_design, cfg.K, cfg.T_p, sc.constellation, sy);
      d.frame.data = random_data(cfg.K, cfg.T_d, sc.constellation, sy);
      d.symbols.push_back(d.frame.symbols());
    } else {
      d.symbols.push_back(random_data(cfg.K, T, sc.constellation, sy));
    }
  }
  Rng noise(derive_seed(cfg.master_seed, trial_index, 0, StreamTag::noise));
  ObserveOptions opts;
  opts.mode = cfg.interference_mode;
  d.obs = observe(d.traces, d.symbols, sc.model, opts, noise);
  return d;
}

TrialResult run_trial(const Scenario& sc, std::size_t trial_index) {
  const TrialData d = make_trial_data(sc, trial_index);
  const ReceiverOptions opt = ReceiverOptions::from_config(sc.cfg);
  const ReceiverInput in(sc.blocks, d.obs, d.frame.pilots, sc.constellation);
  const ChannelTrace& truth = d.traces.front();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TrialResult tr;
  tr.trial = trial_index;
  for (Algorithm alg : sc.cfg.algorithms) {
    AlgorithmResult r;
    r.algorithm = alg;
    try {
      auto fill = [&](const ReceiverOutput& out, bool has_decisions) {
        r.delta_h_ratio = delta_h_ratio(truth, out.channel_means);
        r.ser = has_decisions ? ser(d.frame.data, out.decisions) : nan;
        r.iterations = out.iterations_used;
        r.converged = out.converged;
      };
      switch (alg) {
        case Algorithm::kf_m: fill(run_kf_m(in, opt), true); break;
        case Algorithm::ks_m: fill(run_ks_m(in, opt), true); break;
        case Algorithm::ep: fill(run_ep(in, opt), true); break;
        case Algorithm::kf_tm: fill(run_training(in, d.frame.symbols(), TrainingMode::filter, opt), false); break;
        case Algorithm::ks_tm: fill(run_training(in, d.frame.symbols(), TrainingMode::smoother, opt), false); break;
        case Algorithm::pcsi:
          r.delta_h_ratio = nan;
          r.ser = ser(d.frame.data, run_pcsi(d.obs, truth, sc.model, sc.constellation, sc.cfg.T_p));
          r.iterations = 0;
          r.converged = true;
          break;
      }
    } catch (const NumericalError& e) {
      r.failed = true;
      r.error = e.what();
    }
    tr.results.push_back(std::move(r));
  }
  return tr;
}

std::vector<TrialResult> run_trials(const Scenario& sc, int workers) {
  const std::size_t n = static_cast<std::size_t>(sc.cfg.trials);
  std::vector<TrialResult> results(n);
  const std::size_t pool = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = run_trial(sc, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (pool == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(pool);
    for (std::size_t w = 0; w < pool; ++w) threads.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

std::vector<MetricRow> aggregate(const SystemConfig& cfg, const std::vector<TrialResult>& trials,
                                 const std::string& sweep_name, double sweep_value) {
  std::vector<MetricRow> rows;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    MetricRow row;
    row.sweep_name = sweep_name;
    row.sweep_value = sweep_value;
    row.algorithm = cfg.algorithms[a];
    row.trials = static_cast<int>(trials.size());
    row.master_seed = cfg.master_seed;
    double dh = 0.0, sr = 0.0, iters = 0.0;
    int ok = 0;
    for (const TrialResult& tr : trials) {
      const AlgorithmResult& r = tr.results.at(a);
      if (r.failed) {
        ++row.failures;
        continue;
      }
      dh += r.delta_h_ratio;
      sr += r.ser;
      iters += r.iterations;
      ++ok;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.delta_h_db = ok ? ratio_to_db(dh / ok) : nan;
    row.ser = ok ? sr / ok : nan;
    row.mean_iterations = ok ? iters / ok : nan;
    rows.push_back(std::move(row));
  }
  return rows;
}

SystemConfig apply_sweep_value(const SystemConfig& cfg, const std::string& name, double value) {
  SystemConfig out = cfg;
  auto as_int = [&](int& dst) {
    if (value != std::floor(value) || std::abs(value) > 1e9)
      throw ConfigError("sweep '" + name + "' needs integer values");
    dst = static_cast<int>(value);
  };
  if (name == "M")
    as_int(out.M);
  else if (name == "T_d")
    as_int(out.T_d);
  else if (name == "T_p")
    as_int(out.T_p);
  else if (name == "a")
    out.a = value;
  else if (name == "f_d")
    out.f_d = value;
  else if (name == "rho")
    out.rho = value;
  else
    throw ConfigError("unknown sweep '" + name + "' (expected M, a, T_d, f_d, rho or T_p)");
  out.validate();
  return out;
}

std::vector<MetricRow> run_sweep(const SystemConfig& cfg, const std::string& name, const std::vector<double>& values,
                                 int workers) {
  if (values.empty()) throw ConfigError("sweep '" + name + "' has no values");
  std::vector<SystemConfig> points;
  for (double v : values) points.push_back(apply_sweep_value(cfg, name, v));
  std::vector<MetricRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Scenario sc(points[i]);
    auto part = aggregate(points[i], run_trials(sc, workers), name, values[i]);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<MetricRow> run_base(const SystemConfig& cfg, int workers) {
  cfg.validate();
  const Scenario sc(cfg);
  return aggregate(cfg, run_trials(sc, workers), "base", 0.0);
}

bool failure_budget_exceeded(const std::vector<MetricRow>& rows) {
  return std::any_of(rows.begin(), rows.end(),
                     [](const MetricRow& r) { return r.trials > 0 && 5 * r.failures > r.trials; });
}

std::string format_csv(const std::vector<MetricRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("write_csv: no rows");
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  std::string out = std::string(kCsvHeader) + "\n";
  for (const MetricRow& r : rows) {
    out += r.sweep_name + "," + num(r.sweep_value) + "," + std::string(to_string(r.algorithm)) + "," +
           num(r.delta_h_db) + "," + num(r.ser) + "," + std::to_string(r.trials) + "," +
           std::to_string(r.failures) + "," + std::to_string(r.master_seed) + "," + num(r.mean_iterations) + "\n";
  }
  return out;
}

void write_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  const std::string text = format_csv(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace mmep
