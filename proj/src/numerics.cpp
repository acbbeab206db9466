#include "mmep/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mmep {

CMatrix symmetrize(const CMatrix& s) {
  return (s + s.adjoint()) * 0.5;
}

double hermitian_defect(const CMatrix& s) {
  if (s.size() == 0) return 0.0;
  return (s - s.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const CMatrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double bessel_j0(double x) {
  const double ax = std::abs(x);
  if (ax >= 8.0) return std::cyl_bessel_j(0.0, ax);
  // sum_k (-1)^k (x/2)^{2k} / (k!)^2, term ratio -(x/2)^2 / k^2
  const double q = 0.25 * ax * ax;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= -q / (static_cast<double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

CMatrix psd_sqrt(const CMatrix& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("psd_sqrt: matrix is not square");
  if (s.size() == 0) return s;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(symmetrize(s));
  if (es.info() != Eigen::Success) throw NumericalError("psd_sqrt: eigendecomposition failed");
  RVector lambda = es.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-9 * scale) {
      std::ostringstream msg;
      msg << "psd_sqrt: eigenvalue " << lambda(i) << " below tolerance";
      throw NumericalError(msg.str());
    }
    lambda(i) = std::sqrt(std::max(lambda(i), 0.0));
  }
  const CMatrix& u = es.eigenvectors();
  return symmetrize(u * lambda.cast<cd>().asDiagonal() * u.adjoint());
}

PdInverse regularized_inverse_logdet(const CMatrix& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("regularized_inverse: matrix is not square");
  const Eigen::Index n = s.rows();
  if (n == 0) return {s, 0.0, 0.0};
  const CMatrix h = symmetrize(s);
  const double tau = h.trace().real() / static_cast<double>(n);
  const CMatrix eye = CMatrix::Identity(n, n);

  constexpr double kJitterSteps[] = {0.0, 1e-12, 1e-10, 1e-9};
  for (double step : kJitterSteps) {
    if (step > 0.0 && !(tau > 0.0)) break;
    const double jitter = step * tau;
    Eigen::LLT<CMatrix> llt(h + jitter * eye);
    if (llt.info() != Eigen::Success) continue;
    CMatrix inv = llt.solve(eye);
    if (!inv.allFinite()) continue;
    const auto diag = llt.matrixLLT().diagonal();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(diag(i).real());
    return {symmetrize(inv), log_det, jitter};
  }
  throw NumericalError("regularized_inverse: matrix not positive definite at maximum jitter");
}

CMatrix regularized_inverse(const CMatrix& s) { return regularized_inverse_logdet(s).inverse; }

CVector standard_cn(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVector z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    z(i) = cd(re, im);
  }
  return z;
}

CVector sample_cn(const CVector& mean, const CMatrix& cov, Rng& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw std::invalid_argument("sample_cn: dimension mismatch");
  return CnSampler(cov).draw(mean, rng);
}

}  // namespace mmep
