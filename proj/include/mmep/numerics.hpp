#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mmep {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Every random stream in the project. One engine per (trial, cell, purpose).
using Rng = std::mt19937_64;

/// Raised when a factorization or inversion cannot be completed even after
/// jitter. Receivers turn this into a per-trial failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (S + S^H) / 2
CMatrix symmetrize(const CMatrix& s);

/// Max |S - S^H| entry.
double hermitian_defect(const CMatrix& s);

/// Smallest eigenvalue of a Hermitian matrix (Hermitian part is used).
double min_eigenvalue(const CMatrix& s);

/// Zero-order Bessel function of the first kind. Power series for |x| < 8,
/// std::cyl_bessel_j beyond.
double bessel_j0(double x);

/// Hermitian square root via eigendecomposition. Eigenvalues in
/// [-1e-9 * max(1, |S|), 0) are clipped to zero; anything more negative
/// throws NumericalError.
CMatrix psd_sqrt(const CMatrix& s);

/// Inverse of a Hermitian positive definite matrix. Jitter is added only when
/// the Cholesky factorization fails, escalating up to 1e-9 * trace(S) / dim.
/// Output is symmetrized.
CMatrix regularized_inverse(const CMatrix& s);

/// Inverse and log-determinant from one Cholesky factorization, same jitter
/// policy as regularized_inverse.
struct PdInverse {
  CMatrix inverse;
  double log_det = 0.0;
  double jitter = 0.0;
};
PdInverse regularized_inverse_logdet(const CMatrix& s);

/// Standard circular complex normal vector: real and imaginary parts are
/// independent N(0, 1/2).
CVector standard_cn(Eigen::Index dim, Rng& rng);

/// Draws mean + psd_sqrt(cov) * z. The root is recomputed on every call; use
/// CnSampler when the same covariance is sampled repeatedly.
CVector sample_cn(const CVector& mean, const CMatrix& cov, Rng& rng);

/// Samples CN(mean, cov) with a cached covariance root.
class CnSampler {
 public:
  CnSampler() = default;
  explicit CnSampler(const CMatrix& cov) : root_(psd_sqrt(cov)) {}
  static CnSampler from_root(CMatrix root) {
    CnSampler s;
    s.root_ = std::move(root);
    return s;
  }

  Eigen::Index dim() const { return root_.rows(); }
  const CMatrix& root() const { return root_; }

  CVector draw(Rng& rng) const { return root_ * standard_cn(root_.rows(), rng); }
  CVector draw(const CVector& mean, Rng& rng) const { return mean + draw(rng); }

 private:
  CMatrix root_;
};

}  // namespace mmep
