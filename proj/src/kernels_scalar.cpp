#include "mmep/kernels.hpp"

namespace mmep::kernels::detail {
namespace {

// Written with explicit real/imag arithmetic so the compiler does not route
// through the NaN-checking complex multiply helper.
void caxpy_scalar(cd alpha, const cd* x, cd* y, std::size_t n) {
  const double ar = alpha.real();
  const double ai = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    y[i] = cd(y[i].real() + (ar * xr - ai * xi), y[i].imag() + (ar * xi + ai * xr));
  }
}

void cscal_scalar(cd alpha, const cd* x, cd* y, std::size_t n) {
  const double ar = alpha.real();
  const double ai = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    y[i] = cd(ar * xr - ai * xi, ar * xi + ai * xr);
  }
}

cd cdotc_scalar(const cd* x, const cd* y, std::size_t n) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

double cnorm2_scalar(const cd* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::scalar, caxpy_scalar, cscal_scalar, cdotc_scalar, cnorm2_scalar};
  return t;
}

}  // namespace mmep::kernels::detail
