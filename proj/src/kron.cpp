#include "mmep/kron.hpp"

#include <stdexcept>

namespace mmep::kron {

namespace {
void check_blocks(Eigen::Index total, Eigen::Index k, Eigen::Index m, const char* what) {
  if (m <= 0 || total != k * m) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}
std::size_t usize(Eigen::Index n) { return static_cast<std::size_t>(n); }
}  // namespace

CVector apply(const CVector& h, const CVector& s, Eigen::Index m, const kernels::KernelTable& k) {
  const Eigen::Index users = s.size();
  check_blocks(h.size(), users, m, "kron::apply");
  CVector out = CVector::Zero(m);
  for (Eigen::Index u = 0; u < users; ++u) k.caxpy(s(u), h.data() + u * m, out.data(), usize(m));
  return out;
}

CVector adjoint(const CVector& x, const CVector& s, const kernels::KernelTable& k) {
  const Eigen::Index m = x.size();
  const Eigen::Index users = s.size();
  CVector out(m * users);
  for (Eigen::Index u = 0; u < users; ++u) k.cscal(std::conj(s(u)), x.data(), out.data() + u * m, usize(m));
  return out;
}

CMatrix contract(const CMatrix& v, const CVector& s, Eigen::Index m, const kernels::KernelTable& k) {
  const Eigen::Index users = s.size();
  check_blocks(v.rows(), users, m, "kron::contract");
  check_blocks(v.cols(), users, m, "kron::contract");
  CMatrix out = CMatrix::Zero(m, m);
  for (Eigen::Index kc = 0; kc < users; ++kc) {
    const cd right = std::conj(s(kc));
    for (Eigen::Index j = 0; j < m; ++j) {
      const cd* col = v.data() + (kc * m + j) * v.rows();
      cd* dst = out.data() + j * m;
      for (Eigen::Index kr = 0; kr < users; ++kr) k.caxpy(s(kr) * right, col + kr * m, dst, usize(m));
    }
  }
  return out;
}

CMatrix lift(const CMatrix& g, const CVector& s, const kernels::KernelTable& k) {
  const Eigen::Index m = g.rows();
  if (g.cols() != m) throw std::invalid_argument("kron::lift: G must be square");
  const Eigen::Index users = s.size();
  const Eigen::Index n = m * users;
  CMatrix out(n, n);
  for (Eigen::Index kc = 0; kc < users; ++kc) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const cd* src = g.data() + j * m;
      cd* col = out.data() + (kc * m + j) * n;
      for (Eigen::Index kr = 0; kr < users; ++kr) k.cscal(std::conj(s(kr)) * s(kc), src, col + kr * m, usize(m));
    }
  }
  return out;
}

CMatrix materialize(const CVector& s, Eigen::Index m) {
  const Eigen::Index users = s.size();
  CMatrix out = CMatrix::Zero(m, m * users);
  for (Eigen::Index u = 0; u < users; ++u) out.block(0, u * m, m, m).diagonal().setConstant(s(u));
  return out;
}

CMatrix unvec(const CVector& h, Eigen::Index m) {
  if (m <= 0 || h.size() % m != 0) throw std::invalid_argument("kron::unvec: length not a multiple of M");
  return Eigen::Map<const CMatrix>(h.data(), m, h.size() / m);
}

CVector vec(const CMatrix& h) {
  return Eigen::Map<const CVector>(h.data(), h.size());
}

}  // namespace mmep::kron
