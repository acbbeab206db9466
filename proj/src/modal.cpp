#include "mmep/modal.hpp"

#include "mmep/kron.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace mmep {

namespace {

double offdiag_max(const CMatrix& x) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (i != j) worst = std::max(worst, std::abs(x(i, j)));
  return worst;
}

/// Per-mode K x K matrices from the (k, k') blocks of an MK x MK matrix, or
/// empty if some rotated block is not diagonal.
std::optional<std::vector<CMatrix>> split_modes(const CMatrix& big, const CMatrix& u, Eigen::Index M, Eigen::Index K,
                                                double tol) {
  std::vector<CMatrix> modes(static_cast<std::size_t>(M), CMatrix::Zero(K, K));
  const double scale = std::max(1.0, big.cwiseAbs().maxCoeff());
  for (Eigen::Index kc = 0; kc < K; ++kc) {
    for (Eigen::Index kr = 0; kr < K; ++kr) {
      const CMatrix rotated = u.adjoint() * big.block(kr * M, kc * M, M, M) * u;
      if (offdiag_max(rotated) > tol * scale) return std::nullopt;
      for (Eigen::Index m = 0; m < M; ++m) modes[static_cast<std::size_t>(m)](kr, kc) = rotated(m, m);
    }
  }
  for (auto& x : modes) x = symmetrize(x);
  return modes;
}

}  // namespace

BlockModel BlockModel::dense(const ChannelModel& model) {
  BlockModel bm;
  bm.m_ = model.M;
  bm.k_ = model.K;
  StateBlock b;
  b.antennas = model.M;
  b.offset = 0;
  b.transition = model.transition();
  b.prior = {CVector::Zero(model.dim()), model.r_h};
  b.r_w = model.r_w;
  bm.blocks_.push_back(std::move(b));
  bm.joint_r_w_ = model.r_w;
  return bm;
}

std::optional<BlockModel> BlockModel::modal(const ChannelModel& model, double tol) {
  const Eigen::Index M = model.M;
  const Eigen::Index K = model.K;
  if (model.spatial_corr.empty()) return std::nullopt;
  for (const auto& r : model.spatial_corr)
    if ((r - model.spatial_corr.front()).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index m = 1; m < M; ++m)
      if (model.a(k * M + m) != model.a(k * M)) return std::nullopt;

  Eigen::SelfAdjointEigenSolver<CMatrix> es(symmetrize(model.spatial_corr.front()));
  if (es.info() != Eigen::Success) return std::nullopt;
  const CMatrix u = es.eigenvectors();

  const CMatrix w_rot = u.adjoint() * model.r_w * u;
  if (offdiag_max(w_rot) > tol * std::max(1.0, model.r_w.cwiseAbs().maxCoeff())) return std::nullopt;
  auto q_modes = split_modes(model.q, u, M, K, tol);
  auto h_modes = split_modes(model.r_h, u, M, K, tol);
  if (!q_modes || !h_modes) return std::nullopt;

  RVector a_user(K);
  for (Eigen::Index k = 0; k < K; ++k) a_user(k) = model.a(k * M);

  BlockModel bm;
  bm.m_ = M;
  bm.k_ = K;
  bm.basis_ = u;
  bm.joint_r_w_ = CMatrix::Zero(M, M);
  for (Eigen::Index m = 0; m < M; ++m) {
    StateBlock b;
    b.antennas = 1;
    b.offset = m;
    b.transition = {a_user, (*q_modes)[static_cast<std::size_t>(m)]};
    b.prior = {CVector::Zero(K), (*h_modes)[static_cast<std::size_t>(m)]};
    b.r_w = CMatrix::Constant(1, 1, cd(w_rot(m, m).real(), 0.0));
    bm.joint_r_w_(m, m) = b.r_w(0, 0);
    bm.blocks_.push_back(std::move(b));
  }
  return bm;
}

BlockModel BlockModel::select(const ChannelModel& model, Backend backend) {
  switch (backend) {
    case Backend::dense: return dense(model);
    case Backend::modal: {
      auto bm = modal(model);
      if (!bm) throw ConfigError("backend 'modal' requested but the model has no common antenna eigenbasis");
      return std::move(*bm);
    }
    case Backend::automatic: {
      auto bm = modal(model);
      return bm ? std::move(*bm) : dense(model);
    }
  }
  throw ConfigError("unknown backend");
}

BlockBelief BlockModel::prior() const {
  BlockBelief out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.prior);
  return out;
}

CVector BlockModel::rotate(const CVector& y) const {
  return is_modal() ? CVector(basis_.adjoint() * y) : y;
}

CVector BlockModel::block_obs(const CVector& rotated_y, std::size_t b) const {
  const StateBlock& blk = blocks_[b];
  return rotated_y.segment(blk.offset, blk.antennas);
}

CMatrix BlockModel::joint_h(const BlockBelief& belief) const {
  CMatrix h(m_, k_);
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    h.middleRows(blocks_[b].offset, blocks_[b].antennas) = kron::unvec(belief[b].mean, blocks_[b].antennas);
  return h;
}

CVector BlockModel::mean_original(const BlockBelief& belief) const {
  if (!is_modal()) return belief.front().mean;
  return kron::vec(basis_ * joint_h(belief));
}

CMatrix BlockModel::cov_original(const BlockBelief& belief) const {
  if (!is_modal()) return belief.front().cov;
  CMatrix out(m_ * k_, m_ * k_);
  for (Eigen::Index kc = 0; kc < k_; ++kc) {
    for (Eigen::Index kr = 0; kr < k_; ++kr) {
      CVector d(m_);
      for (Eigen::Index m = 0; m < m_; ++m) d(m) = belief[static_cast<std::size_t>(m)].cov(kr, kc);
      out.block(kr * m_, kc * m_, m_, m_) = basis_ * d.asDiagonal() * basis_.adjoint();
    }
  }
  return symmetrize(out);
}

double BlockModel::cov_trace(const BlockBelief& belief) const {
  double t = 0.0;
  for (const auto& b : belief) t += b.cov.trace().real();
  return t;
}

}  // namespace mmep
