#pragma once

#include "mmep/channel.hpp"
#include "mmep/config.hpp"
#include "mmep/frame.hpp"
#include "mmep/modal.hpp"
#include "mmep/receivers.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mmep {

enum class StreamTag : std::uint64_t { channel = 1, symbols = 2, noise = 3 };

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// child = mix(mix(mix(mix(master) ^ trial) ^ cell) ^ tag)
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t cell, StreamTag tag);

/// (1/T) sum_t ||h_t - h_hat_t||^2 / ||h_t||^2, skipping t with ||h_t|| = 0.
double delta_h_ratio(const ChannelTrace& truth, const std::vector<CVector>& estimate);
/// 10 log10(ratio), floored at -300 dB.
double ratio_to_db(double ratio);
double delta_h_db(const ChannelTrace& truth, const std::vector<CVector>& estimate);

/// Fraction of positions where the decision differs from the truth.
double ser(const SymbolMatrix& truth, const SymbolMatrix& decisions);

/// Everything that is fixed across the trials of one sweep point.
struct Scenario {
  SystemConfig cfg;
  ChannelModel model;             // target cell
  ChannelModel interferer_model;  // neighbor cells, explicit mode only
  BlockModel blocks;
  Constellation constellation;

  explicit Scenario(const SystemConfig& config);
};

/// Per-trial metrics of one algorithm. Undefined metrics are NaN (no SER for
/// the training baselines, no channel estimate for PCSI).
struct AlgorithmResult {
  Algorithm algorithm = Algorithm::kf_m;
  bool failed = false;
  std::string error;
  double delta_h_ratio = 0.0;
  double ser = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct TrialResult {
  std::size_t trial = 0;
  std::vector<AlgorithmResult> results;  // in cfg.algorithms order
};

/// The realization a trial runs on.
struct TrialData {
  std::vector<ChannelTrace> traces;   // per cell, [0] = target
  std::vector<SymbolMatrix> symbols;  // per cell, K x T
  Frame frame;                        // target cell
  ObservationSet obs;
};

TrialData make_trial_data(const Scenario& sc, std::size_t trial_index);
TrialResult run_trial(const Scenario& sc, std::size_t trial_index);

struct MetricRow {
  std::string sweep_name;
  double sweep_value = 0.0;
  Algorithm algorithm = Algorithm::kf_m;
  double delta_h_db = 0.0;
  double ser = 0.0;
  int trials = 0;
  int failures = 0;
  std::uint64_t master_seed = 0;
  double mean_iterations = 0.0;
};

/// Runs cfg.trials trials on up to `workers` threads. Results are returned in
/// trial order regardless of scheduling.
std::vector<TrialResult> run_trials(const Scenario& sc, int workers);

/// Ordered reduction of trial results into one row per algorithm.
std::vector<MetricRow> aggregate(const SystemConfig& cfg, const std::vector<TrialResult>& trials,
                                 const std::string& sweep_name, double sweep_value);

/// Sweepable fields: M, a, T_d, f_d, rho, T_p.
SystemConfig apply_sweep_value(const SystemConfig& cfg, const std::string& name, double value);
std::vector<MetricRow> run_sweep(const SystemConfig& cfg, const std::string& name, const std::vector<double>& values,
                                 int workers);
/// Single point with sweep_name "base".
std::vector<MetricRow> run_base(const SystemConfig& cfg, int workers);

/// True when some row has more than 20% failed trials.
bool failure_budget_exceeded(const std::vector<MetricRow>& rows);

inline constexpr const char* kCsvHeader =
    "sweep_name,sweep_value,algorithm,delta_h_db,ser,trials,failures,master_seed,mean_iterations";

std::string format_csv(const std::vector<MetricRow>& rows);
void write_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path);

}  // namespace mmep
