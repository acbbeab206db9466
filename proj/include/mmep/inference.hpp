#pragma once

// Gaussian message-passing kernels for joint channel/symbol inference over
// the state-space model
//   h_t = A h_{t-1} + v_t,      v_t ~ CN(0, Q)
//   y_t = S_t h_t + w_t,        w_t ~ CN(0, R_w),  S_t = s_t^T (x) I_M
// Beliefs over h_t are Gaussians of dimension MK. Observation factors are
// kept in natural form (eta, Lambda) and Lambda is never inverted alone: it
// is singular whenever K > 1.

#include "mmep/channel.hpp"
#include "mmep/frame.hpp"
#include "mmep/numerics.hpp"

#include <optional>
#include <vector>

namespace mmep {

struct GaussianBelief {
  CVector mean;
  CMatrix cov;

  Eigen::Index dim() const { return mean.size(); }
};

/// Natural parameters of an observation factor: eta = Lambda m, Lambda = V^{-1}.
struct ObsFactorNat {
  CVector eta;
  CMatrix lambda;

  static ObsFactorNat zero(Eigen::Index dim) {
    return {CVector::Zero(dim), CMatrix::Zero(dim, dim)};
  }
};

/// Discrete prior over symbol vectors (the candidates of A^K, or a subset).
struct SymbolPrior {
  std::vector<CVector> candidates;
  std::vector<double> probs;

  std::size_t size() const { return candidates.size(); }

  static SymbolPrior point_mass(const CVector& s);
  /// All order^K vectors, equiprobable. Throws beyond kEnumerationGuard.
  static SymbolPrior uniform(const Constellation& c, Eigen::Index users);
};

inline constexpr std::size_t kEnumerationGuard = 4096;

/// Thrown when the constellation enumeration would exceed kEnumerationGuard.
class EnumerationGuardError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when removing an observation factor leaves no valid Gaussian.
class CavityCollapse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct EvidenceTerms {
  double log_density = 0.0;  // log CN(y | S m, Sigma)
  CMatrix sigma;             // S V S^H + R_w
  CMatrix sigma_inv;
  CVector zeta;              // y - S m

  double density() const;
};

struct MatchResult {
  GaussianBelief posterior;
  CVector grad_m;  // (d log Z / d m)^H
  CMatrix grad_v;  // (d log Z / d V)^T
  double log_evidence = 0.0;
  std::optional<std::vector<double>> symbol_pmf;  // aligned with prior candidates

  double evidence() const;
};

struct SmootherGain {
  CMatrix F;  // Q + A V A^H
  CMatrix J;  // V A^H F^{-1}
};

struct SmoothResult {
  GaussianBelief posterior;
  SmootherGain gain;
};

/// Hard symbol decision for one time step.
struct Decision {
  CVector symbols;
  std::vector<int> indices;  // constellation indices per user
};

/// Forward message: (A m, A V A^H + Q).
GaussianBelief predict(const GaussianBelief& prev, const StateTransition& transition);

/// Single-candidate evidence term CN(y | S m, S V S^H + R_w).
EvidenceTerms evidence_terms(const GaussianBelief& cavity, const CVector& s, const CVector& y, const CMatrix& r_w);

/// Projection of the tilted distribution (cavity x likelihood x symbol prior)
/// onto a Gaussian, by exact enumeration over the prior's candidates.
MatchResult moment_match_exact(const GaussianBelief& cavity, const SymbolPrior& prior, const CVector& y,
                               const CMatrix& r_w);

/// Same projection with the sum collapsed onto one symbol vector.
MatchResult moment_match_hard(const GaussianBelief& cavity, const CVector& s_hat, const CVector& y,
                              const CMatrix& r_w);

/// Max absolute deviation between the analytic gradients of log Z and central
/// finite differences (real and imaginary mean perturbations, Hermitian
/// covariance perturbations).
double gradcheck(const GaussianBelief& cavity, const SymbolPrior& prior, const CVector& y, const CMatrix& r_w,
                 double step = 1e-5);

/// Linear MMSE estimate (H^H R_w^{-1} H + I/E_s)^{-1} H^H R_w^{-1} y followed
/// by a per-user nearest-point decision. `h` is M x K.
Decision detect_mmse(const CMatrix& h, const CVector& y, const CMatrix& r_w, const Constellation& c);

/// Exhaustive argmax of CN(y | S m, S V S^H + R_w) over all symbol vectors.
Decision detect_ml(const GaussianBelief& cavity, const CVector& y, const CMatrix& r_w, const Constellation& c);

/// eta = V^{-1} m - Vc^{-1} mc, Lambda = V^{-1} - Vc^{-1}
ObsFactorNat obs_factor_from(const GaussianBelief& posterior, const GaussianBelief& cavity);

/// Removes an observation factor from a posterior. Throws CavityCollapse if
/// V^{-1} - Lambda is not positive definite.
GaussianBelief obs_cavity(const GaussianBelief& posterior, const ObsFactorNat& factor);

/// Forward belief times observation factor.
GaussianBelief combine_fr(const GaussianBelief& forward, const ObsFactorNat& factor);

/// One Rauch-Tung-Striebel backward step from the reverse cavity at t and the
/// posterior at t+1.
SmoothResult smooth_step(const GaussianBelief& current, const GaussianBelief& next, const StateTransition& transition);

/// Enumerates symbol vector `index` (user 0 is the fastest-varying digit).
CVector enumerate_symbols(const Constellation& c, Eigen::Index users, std::size_t index,
                          std::vector<int>* indices = nullptr);

}  // namespace mmep
