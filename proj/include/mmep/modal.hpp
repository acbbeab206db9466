#pragma once

// Splits the joint state-space model into independent blocks the receivers
// run the inference kernels on. The dense split is a single block of
// dimension MK. When every user shares one spatial correlation R = U D U^H
// and R_w, Q, R_h are all diagonalized by U, rotating the antenna axis by U^H
// decouples the model into M blocks of dimension K with scalar observations;
// the rotation is unitary, so estimates, decisions and errors are unchanged.

#include "mmep/channel.hpp"
#include "mmep/config.hpp"
#include "mmep/inference.hpp"

#include <optional>
#include <vector>

namespace mmep {

struct StateBlock {
  Eigen::Index antennas = 0;  // rows of this block's channel matrix
  Eigen::Index offset = 0;    // first row in the rotated observation
  StateTransition transition;
  GaussianBelief prior;       // belief on h_0
  CMatrix r_w;                // antennas x antennas
};

/// One belief per block.
using BlockBelief = std::vector<GaussianBelief>;
using BlockFactor = std::vector<ObsFactorNat>;

class BlockModel {
 public:
  static BlockModel dense(const ChannelModel& model);
  /// Empty when the model is not diagonalized by a common antenna basis.
  static std::optional<BlockModel> modal(const ChannelModel& model, double tol = 1e-9);
  /// automatic: modal when applicable, dense otherwise. modal: throws
  /// ConfigError when not applicable.
  static BlockModel select(const ChannelModel& model, Backend backend);

  bool is_modal() const { return basis_.size() != 0; }
  Eigen::Index M() const { return m_; }
  Eigen::Index K() const { return k_; }
  const std::vector<StateBlock>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  /// Disturbance covariance in rotated coordinates (M x M).
  const CMatrix& joint_r_w() const { return joint_r_w_; }

  BlockBelief prior() const;
  /// U^H y (identity for the dense split).
  CVector rotate(const CVector& y) const;
  CVector block_obs(const CVector& rotated_y, std::size_t b) const;
  /// Channel matrix (M x K) in rotated coordinates.
  CMatrix joint_h(const BlockBelief& belief) const;
  /// vec(H) in the original antenna coordinates.
  CVector mean_original(const BlockBelief& belief) const;
  CMatrix cov_original(const BlockBelief& belief) const;
  double cov_trace(const BlockBelief& belief) const;

 private:
  Eigen::Index m_ = 0;
  Eigen::Index k_ = 0;
  CMatrix basis_;  // U, empty for the dense split
  std::vector<StateBlock> blocks_;
  CMatrix joint_r_w_;
};

}  // namespace mmep
