#pragma once

#include "mmep/config.hpp"
#include "mmep/numerics.hpp"

#include <iosfwd>
#include <vector>

namespace mmep {

/// Large-scale gains seen by the target base station: beta(i, k) for user k
/// of cell i. Row 0 is the target cell.
struct CellGains {
  Eigen::MatrixXd beta;

  Eigen::Index cells() const { return beta.rows(); }
  Eigen::Index users() const { return beta.cols(); }

  /// beta = 1 in the target cell and `cross_gain` in every other cell.
  static CellGains uniform_cross_gain(int cells, int users, double cross_gain);
};

/// h_t = diag(a) h_{t-1} + v_t, v_t ~ CN(0, q)
struct StateTransition {
  RVector a;
  CMatrix q;
};

/// Spatio-temporal statistics of one cell's uplink channel to the target base
/// station, plus the aggregate disturbance covariance the receiver assumes.
struct ChannelModel {
  Eigen::Index M = 0;
  Eigen::Index K = 0;
  std::vector<CMatrix> spatial_corr;  // R_k, M x M, unit diagonal
  RVector beta;                       // per user
  RVector doppler;                    // f^d_n, length MK
  RVector a;                          // AR(1) coefficients, length MK
  RVector q_v;                        // 1 - a_n^2, length MK
  CMatrix r_h;                        // blockdiag(beta_k R_k)
  CMatrix q;                          // R_h^{1/2} Q_v R_h^{1/2}
  CMatrix r_w;                        // M x M

  // Per-user covariance roots used by the trace simulator.
  std::vector<CMatrix> r_h_root_blocks;
  std::vector<CMatrix> q_root_blocks;

  Eigen::Index dim() const { return M * K; }
  StateTransition transition() const { return {a, q}; }
};

/// Entry (m, n) = rho^{|m-n|}. Rejects rho outside [0, 1).
CMatrix build_spatial_corr(Eigen::Index antennas, double rho);

/// Aggregate interference-plus-noise covariance at the target BS:
/// E_s * sum_{i>0} sum_k beta(i,k) R_{ik} + I_M. `interferer_corr[i-1][k]` is
/// the spatial correlation of user k in cell i.
CMatrix build_rw(double symbol_energy, const CellGains& gains,
                 const std::vector<std::vector<CMatrix>>& interferer_corr);

/// Generic constructor. `doppler` has one entry per channel coefficient.
/// Throws std::logic_error if an equal-coefficient model is not stationary.
ChannelModel make_channel_model(std::vector<CMatrix> spatial_corr, RVector beta, RVector doppler, CMatrix r_w);

/// Target-cell model for a configuration (beta = 1, shared rho and f_d).
ChannelModel build_model(const SystemConfig& cfg);

/// Channel from the users of one interfering cell to the target BS
/// (beta = a). Its r_w member is the identity and is not used.
ChannelModel build_interferer_model(const SystemConfig& cfg);

/// One cell's ground-truth channel, h_1..h_T (h_0 kept for reference).
struct ChannelTrace {
  CVector h0;
  std::vector<CVector> h;

  std::size_t length() const { return h.size(); }
};

/// h_0 ~ CN(0, R_h), h_t = A h_{t-1} + v_t.
ChannelTrace simulate_trace(const ChannelModel& model, int frame_length, Rng& rng);

/// Text export: "# M=.. K=.. T=.. f_d=.. rho=.." then one line per t with
/// 2MK numbers (real, imag interleaved).
void write_trace(std::ostream& out, const ChannelTrace& trace, Eigen::Index M, Eigen::Index K, double f_d,
                 double rho);
ChannelTrace read_trace(std::istream& in);

}  // namespace mmep
