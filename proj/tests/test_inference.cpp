#include "mmep/inference.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace mmep;

namespace {

struct Instance {
  GaussianBelief cavity;
  CVector y;
  CMatrix r_w;
};

Instance random_instance(Eigen::Index M, Eigen::Index K, Rng& rng) {
  Instance in;
  in.cavity.mean = oracle::random_cvector(M * K, rng, 0.7);
  in.cavity.cov = oracle::random_pd(M * K, rng, 0.2);
  in.r_w = oracle::random_pd(M, rng, 0.3);
  in.y = oracle::random_cvector(M, rng, 1.2);
  return in;
}

StateTransition scalar_transition(Eigen::Index n, double a, const CMatrix& q) {
  return {RVector::Constant(n, a), q};
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("predict examples") {
    Rng rng(1);
    const GaussianBelief b{oracle::random_cvector(4, rng), oracle::random_pd(4, rng)};
    const GaussianBelief same = predict(b, scalar_transition(4, 1.0, CMatrix::Zero(4, 4)));
    CHECK(oracle::max_abs(same.mean - b.mean) == 0.0);
    CHECK(oracle::max_abs(same.cov - b.cov) < 1e-15);

    const double a = 0.7;
    const CMatrix R = oracle::random_pd(4, rng);
    const GaussianBelief unit{CVector::Zero(4), CMatrix::Identity(4, 4)};
    const GaussianBelief p = predict(unit, scalar_transition(4, a, (1 - a * a) * R));
    CHECK(oracle::max_abs(p.cov - (a * a * CMatrix::Identity(4, 4) + (1 - a * a) * R)) < 1e-14);
  }

  TEST_CASE("repeated prediction from the stationary prior stays put") {
    Rng rng(2);
    const double a = 0.9;
    const CMatrix Rh = oracle::random_pd(3, rng);
    GaussianBelief b{CVector::Zero(3), Rh};
    for (int t = 0; t < 50; ++t) b = predict(b, scalar_transition(3, a, (1 - a * a) * Rh));
    CHECK(oracle::max_abs(b.cov - Rh) < 1e-12);
  }

  TEST_CASE("evidence terms") {
    Rng rng(3);
    const Eigen::Index M = 2, K = 2;
    const CVector m = oracle::random_cvector(M * K, rng);
    const CVector s = oracle::random_cvector(K, rng);
    const GaussianBelief zero_cov{m, CMatrix::Zero(M * K, M * K)};
    const CVector y = oracle::lifting(s, M) * m;
    const EvidenceTerms e = evidence_terms(zero_cov, s, y, CMatrix::Identity(M, M));
    CHECK(std::abs(e.density() - std::pow(std::numbers::pi, -2.0)) < 1e-14);
    CHECK(oracle::max_abs(e.zeta) < 1e-14);

    for (int rep = 0; rep < 20; ++rep) {
      const Instance in = random_instance(M, K, rng);
      const CVector sk = oracle::random_cvector(K, rng);
      const CMatrix S = oracle::lifting(sk, M);
      const EvidenceTerms ev = evidence_terms(in.cavity, sk, in.y, in.r_w);
      const CMatrix sigma = S * in.cavity.cov * S.adjoint() + in.r_w;
      CHECK(std::abs(ev.log_density - oracle::log_cn(in.y, S * in.cavity.mean, sigma)) < 1e-10);
      CHECK(oracle::max_abs(ev.sigma - sigma) < 1e-12);
      CHECK(oracle::max_abs(ev.sigma_inv - oracle::inv(sigma)) < 1e-10);
    }
  }

  TEST_CASE("point-mass matching is the Kalman measurement update") {
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
      const Instance in = random_instance(2, 2, rng);
      const CVector s = oracle::random_cvector(2, rng);
      const MatchResult r = moment_match_exact(in.cavity, SymbolPrior::point_mass(s), in.y, in.r_w);
      const CMatrix S = oracle::lifting(s, 2);
      const CMatrix& V = in.cavity.cov;
      const CMatrix G = V * S.adjoint() * oracle::inv(S * V * S.adjoint() + in.r_w);
      CHECK(oracle::max_abs(r.posterior.mean - (in.cavity.mean + G * (in.y - S * in.cavity.mean))) < 1e-8);
      CHECK(oracle::max_abs(r.posterior.cov - (V - G * S * V)) < 1e-8);
      REQUIRE(r.symbol_pmf);
      CHECK(r.symbol_pmf->at(0) == 1.0);
    }
  }

  TEST_CASE("exact matching equals mixture moments") {
    Rng rng(5);
    const Constellation c = make_constellation(4, 1.0);
    for (Eigen::Index K : {1, 2}) {
      const SymbolPrior prior = SymbolPrior::uniform(c, K);
      CHECK(prior.size() == static_cast<std::size_t>(K == 1 ? 4 : 16));
      for (int rep = 0; rep < 20; ++rep) {
        const Instance in = random_instance(2, K, rng);
        const MatchResult r = moment_match_exact(in.cavity, prior, in.y, in.r_w);
        const oracle::Moments mm =
            oracle::mixture_moments(in.cavity.mean, in.cavity.cov, prior.candidates, prior.probs, in.y, in.r_w);
        CHECK(oracle::max_abs(r.posterior.mean - mm.mean) < 1e-8);
        CHECK(oracle::max_abs(r.posterior.cov - mm.cov) < 1e-8);
        double total = 0;
        for (std::size_t i = 0; i < mm.weights.size(); ++i) {
          CHECK(std::abs(r.symbol_pmf->at(i) - mm.weights[i]) < 1e-10);
          CHECK(r.symbol_pmf->at(i) >= 0.0);
          total += r.symbol_pmf->at(i);
        }
        CHECK(std::abs(total - 1.0) < 1e-10);
        CHECK(r.evidence() > 0.0);
        CHECK(hermitian_defect(r.posterior.cov) < 1e-10);
      }
    }
  }

  TEST_CASE("non-uniform priors are weighted") {
    Rng rng(55);
    const Constellation c = make_constellation(4, 1.0);
    SymbolPrior prior = SymbolPrior::uniform(c, 1);
    prior.probs = {0.7, 0.1, 0.15, 0.05};
    const Instance in = random_instance(2, 1, rng);
    const MatchResult r = moment_match_exact(in.cavity, prior, in.y, in.r_w);
    const auto mm = oracle::mixture_moments(in.cavity.mean, in.cavity.cov, prior.candidates, prior.probs, in.y, in.r_w);
    CHECK(oracle::max_abs(r.posterior.mean - mm.mean) < 1e-8);
    CHECK(oracle::max_abs(r.posterior.cov - mm.cov) < 1e-8);
  }

  TEST_CASE("symmetric case gives a uniform symbol posterior") {
    const Constellation c = make_constellation(4, 1.0);
    const GaussianBelief cav{CVector::Zero(2), CMatrix::Identity(2, 2)};
    const MatchResult r =
        moment_match_exact(cav, SymbolPrior::uniform(c, 1), CVector::Zero(2), CMatrix::Identity(2, 2));
    for (double p : *r.symbol_pmf) CHECK(std::abs(p - 0.25) < 1e-12);
  }

  TEST_CASE("enumeration guard") {
    const Constellation c = make_constellation(4, 1.0);
    CHECK_NOTHROW(SymbolPrior::uniform(c, 6));
    CHECK_THROWS_AS(SymbolPrior::uniform(c, 7), EnumerationGuardError);
    const GaussianBelief cav{CVector::Zero(7), CMatrix::Identity(7, 7)};
    CHECK_THROWS_AS(detect_ml(cav, CVector::Zero(1), CMatrix::Identity(1, 1), c), EnumerationGuardError);
  }

  TEST_CASE("enumeration order: user 0 is the fastest digit") {
    const Constellation c = make_constellation(4, 1.0);
    std::vector<int> idx;
    const CVector s = enumerate_symbols(c, 3, 1 + 4 * 2 + 16 * 3, &idx);
    CHECK(idx == std::vector<int>{1, 2, 3});
    CHECK(s(2) == c.point(3));
  }

  TEST_CASE("gradients match finite differences") {
    Rng rng(6);
    const Constellation c = make_constellation(4, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      const Instance in = random_instance(2, 1, rng);
      CHECK(gradcheck(in.cavity, SymbolPrior::uniform(c, 1), in.y, in.r_w) <= 1e-4);
      CHECK(gradcheck(in.cavity, SymbolPrior::point_mass(CVector::Constant(1, c.points[1])), in.y, in.r_w) <= 1e-4);
    }
    const Instance in = random_instance(2, 2, rng);
    CHECK(gradcheck(in.cavity, SymbolPrior::uniform(c, 2), in.y, in.r_w) <= 1e-4);
  }

  TEST_CASE("zero cavity covariance leaves the mean unchanged") {
    Rng rng(7);
    const Constellation c = make_constellation(4, 1.0);
    Instance in = random_instance(2, 1, rng);
    in.cavity.cov.setZero();
    const MatchResult r = moment_match_exact(in.cavity, SymbolPrior::uniform(c, 1), in.y, in.r_w);
    CHECK(oracle::max_abs(r.posterior.mean - in.cavity.mean) < 1e-15);
    CHECK(oracle::max_abs(r.posterior.cov) < 1e-15);
  }

  TEST_CASE("hard matching equals exact matching with a point mass") {
    Rng rng(8);
    for (int rep = 0; rep < 10; ++rep) {
      const Instance in = random_instance(3, 2, rng);
      const CVector s = oracle::random_cvector(2, rng);
      const MatchResult h = moment_match_hard(in.cavity, s, in.y, in.r_w);
      const MatchResult e = moment_match_exact(in.cavity, SymbolPrior::point_mass(s), in.y, in.r_w);
      CHECK(oracle::max_abs(h.posterior.mean - e.posterior.mean) < 1e-14);
      CHECK(oracle::max_abs(h.posterior.cov - e.posterior.cov) < 1e-14);
      CHECK(!h.symbol_pmf);
      // A measurement update never increases uncertainty in any direction.
      CHECK(min_eigenvalue(in.cavity.cov - h.posterior.cov) >= -1e-9);
      CHECK(min_eigenvalue(h.posterior.cov) >= -1e-6);
    }
  }

  TEST_CASE("MMSE detection") {
    const Constellation c = make_constellation(4, 1.0);
    Rng rng(9);
    const CMatrix H = CMatrix::Identity(3, 3);
    const SymbolMatrix s = mmep::random_data(3, 1, c, rng);
    const Decision d = detect_mmse(H, H * s.col(0), 1e-9 * CMatrix::Identity(3, 3), c);
    CHECK(d.symbols == CVector(s.col(0)));
    CHECK(d.indices.size() == 3);

    // x = 0 is equidistant from every point.
    const Decision tie = detect_mmse(H, CVector::Zero(3), CMatrix::Identity(3, 3), c);
    for (int i : tie.indices) CHECK(i == 0);

    int errors = 0;
    for (int rep = 0; rep < 100; ++rep) {
      CMatrix Hr(16, 4);
      for (Eigen::Index k = 0; k < 4; ++k) Hr.col(k) = oracle::random_cvector(16, rng, std::sqrt(0.5));
      const SymbolMatrix sr = mmep::random_data(4, 1, c, rng);
      const CVector y = Hr * sr.col(0) + 0.01 * oracle::random_cvector(16, rng);
      const Decision dr = detect_mmse(Hr, y, 1e-4 * CMatrix::Identity(16, 16), c);
      errors += static_cast<int>((dr.symbols - sr.col(0)).cwiseAbs().maxCoeff() > 1e-12);
    }
    CHECK(errors == 0);
  }

  TEST_CASE("ML detection") {
    const Constellation c = make_constellation(4, 1.0);
    Rng rng(10);
    const Eigen::Index M = 2, K = 2;
    for (int rep = 0; rep < 10; ++rep) {
      const CVector h = oracle::random_cvector(M * K, rng);
      const SymbolMatrix s = mmep::random_data(K, 1, c, rng);
      const GaussianBelief exact{h, CMatrix::Zero(M * K, M * K)};
      const CVector y = oracle::lifting(s.col(0), M) * h;
      CHECK(detect_ml(exact, y, 1e-6 * CMatrix::Identity(M, M), c).symbols == CVector(s.col(0)));

      const Instance in = random_instance(M, K, rng);
      const SymbolPrior all = SymbolPrior::uniform(c, K);
      double best = -1e300;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < all.size(); ++i) {
        const CMatrix S = oracle::lifting(all.candidates[i], M);
        const double ll = oracle::log_cn(in.y, S * in.cavity.mean, S * in.cavity.cov * S.adjoint() + in.r_w);
        if (ll > best) {
          best = ll;
          arg = i;
        }
      }
      CHECK(detect_ml(in.cavity, in.y, in.r_w, c).symbols == all.candidates[arg]);
    }
  }

  TEST_CASE("ML and MMSE agree at high SNR") {
    const Constellation c = make_constellation(4, 1.0);
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::Index M = 8, K = 2;
      const CVector h = oracle::random_cvector(M * K, rng, std::sqrt(0.5));
      const SymbolMatrix s = mmep::random_data(K, 1, c, rng);
      const CMatrix rw = 1e-4 * CMatrix::Identity(M, M);
      const CVector y = oracle::lifting(s.col(0), M) * h + 0.01 * oracle::random_cvector(M, rng);
      const GaussianBelief b{h, CMatrix::Zero(M * K, M * K)};
      CHECK(detect_ml(b, y, rw, c).symbols == detect_mmse(kron::unvec(h, M), y, rw, c).symbols);
    }
  }

  TEST_CASE("observation factor scalar example and round trip") {
    const GaussianBelief cav{CVector::Zero(1), CMatrix::Identity(1, 1)};
    const GaussianBelief post{CVector::Constant(1, 1.0), 0.5 * CMatrix::Identity(1, 1)};
    const ObsFactorNat f = obs_factor_from(post, cav);
    CHECK(std::abs(f.lambda(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(f.eta(0) - 2.0) < 1e-14);
    const GaussianBelief back = obs_cavity(post, f);
    CHECK(std::abs(back.cov(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(back.mean(0)) < 1e-14);

    const ObsFactorNat none = obs_factor_from(post, post);
    CHECK(oracle::max_abs(none.eta) < 1e-14);
    CHECK(oracle::max_abs(none.lambda) < 1e-14);

    const GaussianBelief same = obs_cavity(post, ObsFactorNat::zero(1));
    CHECK(oracle::max_abs(same.mean - post.mean) < 1e-14);

    const GaussianBelief fwd{CVector::Zero(1), CMatrix::Identity(1, 1)};
    ObsFactorNat g{CVector::Constant(1, 2.0), CMatrix::Identity(1, 1)};
    const GaussianBelief r = combine_fr(fwd, g);
    CHECK(std::abs(r.cov(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(r.mean(0) - 1.0) < 1e-14);
    const GaussianBelief unchanged = combine_fr(post, ObsFactorNat::zero(1));
    CHECK(oracle::max_abs(unchanged.cov - post.cov) < 1e-14);
  }

  TEST_CASE("factor algebra on random instances") {
    Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
      const Instance in = random_instance(2, 2, rng);
      const CVector s = oracle::random_cvector(2, rng);
      const MatchResult r = moment_match_hard(in.cavity, s, in.y, in.r_w);
      const ObsFactorNat f = obs_factor_from(r.posterior, in.cavity);
      CHECK(hermitian_defect(f.lambda) < 1e-10);
      const GaussianBelief back = obs_cavity(r.posterior, f);
      CHECK(oracle::max_abs(back.mean - in.cavity.mean) < 1e-8);
      CHECK(oracle::max_abs(back.cov - in.cavity.cov) < 1e-8);
      // The hard-decision factor is the likelihood itself.
      const CMatrix S = oracle::lifting(s, 2);
      CHECK(oracle::max_abs(f.lambda - S.adjoint() * oracle::inv(in.r_w) * S) < 1e-8);
      const GaussianBelief again = combine_fr(in.cavity, f);
      CHECK(oracle::max_abs(again.mean - r.posterior.mean) < 1e-8);
      CHECK(oracle::max_abs(again.cov - r.posterior.cov) < 1e-8);
    }
  }

  TEST_CASE("cavity collapse is reported") {
    const GaussianBelief post{CVector::Zero(1), CMatrix::Identity(1, 1)};
    const ObsFactorNat f{CVector::Zero(1), 2.0 * CMatrix::Identity(1, 1)};
    CHECK_THROWS_AS(obs_cavity(post, f), CavityCollapse);
  }

  TEST_CASE("smoother step") {
    Rng rng(13);
    const double a = 0.8;
    const CMatrix Q = oracle::random_pd(3, rng);
    const StateTransition tr = scalar_transition(3, a, Q);
    const GaussianBelief cur{oracle::random_cvector(3, rng), oracle::random_pd(3, rng)};
    const SmoothResult fixed = smooth_step(cur, predict(cur, tr), tr);
    CHECK(oracle::max_abs(fixed.posterior.mean - cur.mean) < 1e-12);
    CHECK(oracle::max_abs(fixed.posterior.cov - cur.cov) < 1e-12);
    CHECK(oracle::max_abs(fixed.gain.F - predict(cur, tr).cov) < 1e-12);

    const StateTransition still = scalar_transition(3, 1.0, CMatrix::Zero(3, 3));
    const GaussianBelief next{oracle::random_cvector(3, rng), oracle::random_pd(3, rng)};
    const SmoothResult s = smooth_step(cur, next, still);
    CHECK(oracle::max_abs(s.posterior.mean - next.mean) < 1e-10);
    CHECK(oracle::max_abs(s.posterior.cov - next.cov) < 1e-10);
    CHECK(oracle::max_abs(s.gain.J - CMatrix::Identity(3, 3)) < 1e-10);

    // A tighter next belief cannot increase uncertainty.
    const GaussianBelief pred = predict(cur, tr);
    const GaussianBelief tight{pred.mean, 0.5 * pred.cov};
    const SmoothResult sm = smooth_step(cur, tight, tr);
    CHECK(sm.posterior.cov.trace().real() <= cur.cov.trace().real() + 1e-6);
  }
}
