#pragma once

// Implicit application of the symbol-lifting operator S = s^T (x) I_M.
// vec ordering is column-major: h[k*M + m] = H(m, k). S is never
// materialized; every routine below reduces to complex axpy/scale over
// contiguous length-M column segments.

#include "mmep/kernels.hpp"
#include "mmep/numerics.hpp"

namespace mmep::kron {

/// S h = H s  (length M)
CVector apply(const CVector& h, const CVector& s, Eigen::Index m,
              const kernels::KernelTable& k = kernels::active());

/// S^H x = conj(s) (x) x  (length M*K)
CVector adjoint(const CVector& x, const CVector& s, const kernels::KernelTable& k = kernels::active());

/// S V S^H = sum_{k,k'} s_k conj(s_k') V_(k,k')  (M x M)
CMatrix contract(const CMatrix& v, const CVector& s, Eigen::Index m,
                 const kernels::KernelTable& k = kernels::active());

/// S^H G S = (conj(s) s^T) (x) G  (MK x MK)
CMatrix lift(const CMatrix& g, const CVector& s, const kernels::KernelTable& k = kernels::active());

/// Dense s^T (x) I_M, for oracles and tests only.
CMatrix materialize(const CVector& s, Eigen::Index m);

/// vec^{-1}: length M*K -> M x K
CMatrix unvec(const CVector& h, Eigen::Index m);

/// vec: M x K -> length M*K
CVector vec(const CMatrix& h);

}  // namespace mmep::kron
