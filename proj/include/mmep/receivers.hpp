#pragma once

// Receiver drivers: KF-M, KS-M, the iterative EP receiver, the known-symbol
// training baselines and the perfect-CSI detector. Each runs on a BlockModel
// so the same code serves the dense and the per-mode split.

#include "mmep/channel.hpp"
#include "mmep/config.hpp"
#include "mmep/frame.hpp"
#include "mmep/inference.hpp"
#include "mmep/modal.hpp"

#include <optional>
#include <vector>

namespace mmep {

struct ReceiverOptions {
  Detector detector = Detector::mmse;
  int max_iterations = 10;
  double epsilon = 1e-6;
  ConvergenceMetric convergence = ConvergenceMetric::stacked;
  KsVariant ks_variant = KsVariant::smooth_redetect;
  bool keep_covs = false;  // fill ReceiverOutput::channel_covs (original coordinates)

  static ReceiverOptions from_config(const SystemConfig& cfg);
};

struct ReceiverOutput {
  std::vector<CVector> channel_means;               // h_hat_t, t = 1..T
  std::optional<std::vector<CMatrix>> channel_covs;
  std::vector<double> cov_traces;                   // trace of the reported covariance per t
  SymbolMatrix decisions;                           // K x T_d
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> diagnostics;                  // relative mean change per EP iteration
};

/// Per-t state of the iterative receiver.
struct EpState {
  std::vector<BlockBelief> forward;    // q^F_t
  std::vector<BlockBelief> reverse;    // forward times observation factor
  std::vector<BlockBelief> posterior;  // q_t
  std::vector<BlockFactor> factors;    // observation factors, natural form
  std::vector<CVector> symbols;        // symbol vector used at each t
  int iteration = 0;
};

/// Observations rotated into the BlockModel's coordinates, computed once per trial.
struct ReceiverInput {
  const BlockModel& model;
  std::vector<CVector> y;  // rotated, length T
  SymbolMatrix pilots;     // K x T_p
  Constellation constellation;

  ReceiverInput(const BlockModel& bm, const ObservationSet& obs, SymbolMatrix pilot_block, Constellation c);
  Eigen::Index length() const { return static_cast<Eigen::Index>(y.size()); }
  Eigen::Index pilot_length() const { return pilots.cols(); }
};

ReceiverOutput run_kf_m(const ReceiverInput& in, const ReceiverOptions& opt);
ReceiverOutput run_ks_m(const ReceiverInput& in, const ReceiverOptions& opt);
/// `state` receives the final iterate when non-null.
ReceiverOutput run_ep(const ReceiverInput& in, const ReceiverOptions& opt, EpState* state = nullptr);

enum class TrainingMode { filter, smoother };
/// Every symbol known: `symbols` is K x T. No decisions are produced.
ReceiverOutput run_training(const ReceiverInput& in, const SymbolMatrix& symbols, TrainingMode mode,
                            const ReceiverOptions& opt);

/// MMSE detection with the true channel at every data position (original coordinates).
SymbolMatrix run_pcsi(const ObservationSet& obs, const ChannelTrace& truth, const ChannelModel& model,
                      const Constellation& c, Eigen::Index pilot_length);

}  // namespace mmep
