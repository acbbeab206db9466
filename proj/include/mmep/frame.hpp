#pragma once

#include "mmep/channel.hpp"
#include "mmep/config.hpp"
#include "mmep/numerics.hpp"

#include <vector>

namespace mmep {

/// K x T matrix of transmitted symbols, one column per time step.
using SymbolMatrix = Eigen::MatrixXcd;

/// Gray-mapped QPSK: index bits (b1 b0) give real sign (-1)^b1 and imaginary
/// sign (-1)^b0, scaled to average energy E_s.
struct Constellation {
  int order = 0;
  std::vector<cd> points;
  double energy = 0.0;

  /// Nearest point index; ties resolve to the lowest index.
  int nearest(cd x) const;
  cd point(int index) const { return points.at(static_cast<std::size_t>(index)); }
};

/// Only order 4 is supported.
Constellation make_constellation(int order, double symbol_energy);

/// First K rows of the T_p x T_p Sylvester-Hadamard matrix, +1 -> sqrt(E_s/2)(1+j)
/// and -1 -> -sqrt(E_s/2)(1+j). Needs K a power of two and T_p in {K, 2K}.
SymbolMatrix hadamard_pilots(int users, int pilot_length, const Constellation& c);

/// First K rows of the T_p-point DFT matrix scaled to energy E_s. Orthogonal
/// for any K <= T_p; entries are not constellation points in general.
SymbolMatrix dft_pilots(int users, int pilot_length, const Constellation& c);

/// K x T_d i.i.d. uniform constellation draws.
SymbolMatrix random_data(int users, int length, const Constellation& c, Rng& rng);

SymbolMatrix make_pilots(PilotDesign design, int users, int pilot_length, const Constellation& c, Rng& rng);

/// Pilot preamble followed by data.
struct Frame {
  SymbolMatrix pilots;  // K x T_p
  SymbolMatrix data;    // K x T_d

  Eigen::Index users() const { return pilots.rows(); }
  Eigen::Index pilot_length() const { return pilots.cols(); }
  Eigen::Index data_length() const { return data.cols(); }
  Eigen::Index length() const { return pilots.cols() + data.cols(); }

  /// Full K x T symbol matrix.
  SymbolMatrix symbols() const;
  /// Symbol vector at 0-based time t.
  CVector symbols_at(Eigen::Index t) const;
};

struct ObservationSet {
  std::vector<CVector> y;

  std::size_t length() const { return y.size(); }
};

struct ObserveOptions {
  InterferenceMode mode = InterferenceMode::explicit_sum;
  bool noiseless = false;
};

/// Received vectors at the target BS. traces[0] / symbols[0] belong to the
/// target cell. Explicit mode sums every cell's H_i(t) s_i(t) and adds CN(0, I)
/// noise; gaussian mode uses only the target cell and adds CN(0, R_w).
ObservationSet observe(const std::vector<ChannelTrace>& traces, const std::vector<SymbolMatrix>& symbols,
                       const ChannelModel& model, const ObserveOptions& options, Rng& rng);

}  // namespace mmep
