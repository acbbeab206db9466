#include "mmep/inference.hpp"

#include "mmep/kron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mmep {

namespace {

void check_obs_dims(const GaussianBelief& cavity, Eigen::Index users, const CVector& y, const CMatrix& r_w) {
  const Eigen::Index m = y.size();
  if (m == 0 || cavity.dim() != m * users || cavity.cov.rows() != cavity.dim() || r_w.rows() != m ||
      r_w.cols() != m)
    throw std::invalid_argument("inference: observation dimensions do not match the belief");
}

/// A V A^H for diagonal real A.
CMatrix diag_sandwich(const RVector& a, const CMatrix& v) {
  return (v.array() * (a * a.transpose()).cast<cd>().array()).matrix();
}

/// Per-candidate quantities entering the gradient sums.
struct CandidateTerms {
  double log_weight;  // log p(s) + log CN(...)
  CVector g;          // S^H Sigma^{-1} zeta
  CMatrix gv;         // Sigma^{-1} zeta zeta^H Sigma^{-1} - Sigma^{-1}   (M x M)
  CVector s;
};

CandidateTerms candidate_terms(const GaussianBelief& cavity, const CVector& s, double prior, const CVector& y,
                               const CMatrix& r_w) {
  const EvidenceTerms ev = evidence_terms(cavity, s, y, r_w);
  const CVector u = ev.sigma_inv * ev.zeta;
  CandidateTerms c;
  c.log_weight = std::log(prior) + ev.log_density;
  c.g = kron::adjoint(u, s);
  c.gv = u * u.adjoint() - ev.sigma_inv;
  c.s = s;
  return c;
}

/// Combines per-candidate terms into gradients, posterior and pmf.
MatchResult assemble(const GaussianBelief& cavity, const std::vector<CandidateTerms>& terms, bool keep_pmf) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) max_lw = std::max(max_lw, t.log_weight);
  if (!std::isfinite(max_lw)) throw NumericalError("moment match: every candidate has zero evidence");

  std::vector<double> w(terms.size());
  double total = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    w[i] = std::exp(terms[i].log_weight - max_lw);
    total += w[i];
  }
  for (double& wi : w) wi /= total;

  const Eigen::Index n = cavity.dim();
  MatchResult r;
  r.log_evidence = max_lw + std::log(total);
  r.grad_m = CVector::Zero(n);
  r.grad_v = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (w[i] == 0.0) continue;
    r.grad_m += w[i] * terms[i].g;
    r.grad_v += w[i] * kron::lift(terms[i].gv, terms[i].s);
  }
  r.grad_v = symmetrize(r.grad_v);

  const CMatrix& vc = cavity.cov;
  r.posterior.mean = cavity.mean + vc * r.grad_m;
  r.posterior.cov = symmetrize(vc - vc * (r.grad_m * r.grad_m.adjoint() - r.grad_v) * vc);
  if (keep_pmf) r.symbol_pmf = std::move(w);
  return r;
}

}  // namespace

SymbolPrior SymbolPrior::point_mass(const CVector& s) {
  return {{s}, {1.0}};
}

SymbolPrior SymbolPrior::uniform(const Constellation& c, Eigen::Index users) {
  std::size_t count = 1;
  for (Eigen::Index k = 0; k < users; ++k) {
    count *= static_cast<std::size_t>(c.order);
    if (count > kEnumerationGuard) throw EnumerationGuardError("symbol enumeration exceeds the guard of 4096");
  }
  SymbolPrior p;
  p.candidates.reserve(count);
  for (std::size_t i = 0; i < count; ++i) p.candidates.push_back(enumerate_symbols(c, users, i));
  p.probs.assign(count, 1.0 / static_cast<double>(count));
  return p;
}

CVector enumerate_symbols(const Constellation& c, Eigen::Index users, std::size_t index, std::vector<int>* indices) {
  CVector s(users);
  if (indices) indices->resize(static_cast<std::size_t>(users));
  for (Eigen::Index k = 0; k < users; ++k) {
    const int digit = static_cast<int>(index % static_cast<std::size_t>(c.order));
    index /= static_cast<std::size_t>(c.order);
    s(k) = c.point(digit);
    if (indices) (*indices)[static_cast<std::size_t>(k)] = digit;
  }
  return s;
}

double EvidenceTerms::density() const { return std::exp(log_density); }
double MatchResult::evidence() const { return std::exp(log_evidence); }

GaussianBelief predict(const GaussianBelief& prev, const StateTransition& transition) {
  if (transition.a.size() != prev.dim() || transition.q.rows() != prev.dim())
    throw std::invalid_argument("predict: dimension mismatch");
  GaussianBelief out;
  out.mean = transition.a.cast<cd>().cwiseProduct(prev.mean);
  out.cov = symmetrize(diag_sandwich(transition.a, prev.cov) + transition.q);
  return out;
}

EvidenceTerms evidence_terms(const GaussianBelief& cavity, const CVector& s, const CVector& y, const CMatrix& r_w) {
  check_obs_dims(cavity, s.size(), y, r_w);
  const Eigen::Index m = y.size();
  EvidenceTerms ev;
  ev.sigma = symmetrize(kron::contract(cavity.cov, s, m) + r_w);
  const PdInverse inv = regularized_inverse_logdet(ev.sigma);
  ev.sigma_inv = inv.inverse;
  ev.zeta = y - kron::apply(cavity.mean, s, m);
  const double quad = ev.zeta.dot(ev.sigma_inv * ev.zeta).real();
  ev.log_density = -static_cast<double>(m) * std::log(std::numbers::pi) - inv.log_det - quad;
  return ev;
}

MatchResult moment_match_exact(const GaussianBelief& cavity, const SymbolPrior& prior, const CVector& y,
                               const CMatrix& r_w) {
  if (prior.size() == 0 || prior.size() != prior.probs.size())
    throw std::invalid_argument("moment_match_exact: malformed prior");
  if (prior.size() > kEnumerationGuard) throw EnumerationGuardError("moment_match_exact: prior exceeds the guard");
  std::vector<CandidateTerms> terms;
  terms.reserve(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior.probs[i] <= 0.0) {
      CandidateTerms zero;
      zero.log_weight = -std::numeric_limits<double>::infinity();
      zero.s = prior.candidates[i];
      terms.push_back(std::move(zero));
      continue;
    }
    terms.push_back(candidate_terms(cavity, prior.candidates[i], prior.probs[i], y, r_w));
  }
  return assemble(cavity, terms, true);
}

MatchResult moment_match_hard(const GaussianBelief& cavity, const CVector& s_hat, const CVector& y,
                              const CMatrix& r_w) {
  std::vector<CandidateTerms> terms;
  terms.push_back(candidate_terms(cavity, s_hat, 1.0, y, r_w));
  return assemble(cavity, terms, false);
}

double gradcheck(const GaussianBelief& cavity, const SymbolPrior& prior, const CVector& y, const CMatrix& r_w,
                 double step) {
  const MatchResult analytic = moment_match_exact(cavity, prior, y, r_w);
  auto log_z = [&](const GaussianBelief& b) { return moment_match_exact(b, prior, y, r_w).log_evidence; };
  const Eigen::Index n = cavity.dim();
  double worst = 0.0;

  for (Eigen::Index j = 0; j < n; ++j) {
    GaussianBelief plus = cavity, minus = cavity;
    plus.mean(j) += step;
    minus.mean(j) -= step;
    const double d_re = (log_z(plus) - log_z(minus)) / (2.0 * step);
    plus = cavity;
    minus = cavity;
    plus.mean(j) += cd(0.0, step);
    minus.mean(j) -= cd(0.0, step);
    const double d_im = (log_z(plus) - log_z(minus)) / (2.0 * step);
    // g = (d/dm)^H with d/dm = (d/dRe - i d/dIm) / 2
    worst = std::max(worst, std::abs(cd(0.5 * d_re, 0.5 * d_im) - analytic.grad_m(j)));
  }

  auto check_direction = [&](const CMatrix& e) {
    GaussianBelief plus = cavity, minus = cavity;
    plus.cov += step * e;
    minus.cov -= step * e;
    const double fd = (log_z(plus) - log_z(minus)) / (2.0 * step);
    const double exact = (analytic.grad_v * e).trace().real();
    worst = std::max(worst, std::abs(fd - exact));
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j; k < n; ++k) {
      CMatrix e = CMatrix::Zero(n, n);
      if (j == k) {
        e(j, j) = 1.0;
        check_direction(e);
        continue;
      }
      e(j, k) = 1.0;
      e(k, j) = 1.0;
      check_direction(e);
      e(j, k) = cd(0.0, 1.0);
      e(k, j) = cd(0.0, -1.0);
      check_direction(e);
    }
  }
  return worst;
}

Decision detect_mmse(const CMatrix& h, const CVector& y, const CMatrix& r_w, const Constellation& c) {
  if (h.rows() != y.size() || r_w.rows() != y.size()) throw std::invalid_argument("detect_mmse: dimension mismatch");
  const Eigen::Index users = h.cols();
  const CMatrix w_inv_h = regularized_inverse(r_w) * h;  // R_w^{-1} H
  CMatrix gram = h.adjoint() * w_inv_h;
  gram.diagonal().array() += 1.0 / c.energy;
  const CVector x = regularized_inverse(gram) * (w_inv_h.adjoint() * y);
  Decision d;
  d.symbols.resize(users);
  d.indices.resize(static_cast<std::size_t>(users));
  for (Eigen::Index k = 0; k < users; ++k) {
    const int idx = c.nearest(x(k));
    d.indices[static_cast<std::size_t>(k)] = idx;
    d.symbols(k) = c.point(idx);
  }
  return d;
}

Decision detect_ml(const GaussianBelief& cavity, const CVector& y, const CMatrix& r_w, const Constellation& c) {
  const Eigen::Index m = y.size();
  if (m == 0 || cavity.dim() % m != 0) throw std::invalid_argument("detect_ml: dimension mismatch");
  const Eigen::Index users = cavity.dim() / m;
  std::size_t count = 1;
  for (Eigen::Index k = 0; k < users; ++k) {
    count *= static_cast<std::size_t>(c.order);
    if (count > kEnumerationGuard) throw EnumerationGuardError("detect_ml: enumeration exceeds the guard of 4096");
  }
  Decision best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<int> idx;
    CVector s = enumerate_symbols(c, users, i, &idx);
    const double ll = evidence_terms(cavity, s, y, r_w).log_density;
    if (ll > best_ll) {
      best_ll = ll;
      best.symbols = std::move(s);
      best.indices = std::move(idx);
    }
  }
  return best;
}

ObsFactorNat obs_factor_from(const GaussianBelief& posterior, const GaussianBelief& cavity) {
  if (posterior.dim() != cavity.dim()) throw std::invalid_argument("obs_factor_from: dimension mismatch");
  const CMatrix p = regularized_inverse(posterior.cov);
  const CMatrix pc = regularized_inverse(cavity.cov);
  return {p * posterior.mean - pc * cavity.mean, symmetrize(p - pc)};
}

GaussianBelief obs_cavity(const GaussianBelief& posterior, const ObsFactorNat& factor) {
  if (posterior.dim() != factor.eta.size()) throw std::invalid_argument("obs_cavity: dimension mismatch");
  const CMatrix p = regularized_inverse(posterior.cov);
  GaussianBelief out;
  try {
    out.cov = regularized_inverse(p - factor.lambda);
  } catch (const NumericalError& e) {
    throw CavityCollapse(std::string("obs_cavity: cavity precision is not positive definite (") + e.what() + ")");
  }
  out.mean = out.cov * (p * posterior.mean - factor.eta);
  return out;
}

GaussianBelief combine_fr(const GaussianBelief& forward, const ObsFactorNat& factor) {
  if (forward.dim() != factor.eta.size()) throw std::invalid_argument("combine_fr: dimension mismatch");
  const CMatrix pf = regularized_inverse(forward.cov);
  GaussianBelief out;
  out.cov = regularized_inverse(pf + factor.lambda);
  out.mean = out.cov * (pf * forward.mean + factor.eta);
  return out;
}

SmoothResult smooth_step(const GaussianBelief& current, const GaussianBelief& next, const StateTransition& transition) {
  if (current.dim() != next.dim() || transition.a.size() != current.dim())
    throw std::invalid_argument("smooth_step: dimension mismatch");
  const RVector& a = transition.a;
  SmoothResult r;
  r.gain.F = symmetrize(transition.q + diag_sandwich(a, current.cov));
  // V A^H with A diagonal real scales columns.
  const CMatrix v_ah = current.cov * a.cast<cd>().asDiagonal();
  r.gain.J = v_ah * regularized_inverse(r.gain.F);
  const CVector predicted = a.cast<cd>().cwiseProduct(current.mean);
  r.posterior.mean = current.mean + r.gain.J * (next.mean - predicted);
  r.posterior.cov = symmetrize(current.cov + r.gain.J * (next.cov - r.gain.F) * r.gain.J.adjoint());
  return r;
}

}  // namespace mmep
