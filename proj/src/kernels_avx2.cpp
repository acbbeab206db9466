// Compiled with -mavx2 -mfma. Nothing in here may run before
// kernels::isa_available(Isa::avx2) has confirmed CPU support.

#include "mmep/kernels.hpp"

#include <immintrin.h>

namespace mmep::kernels::detail {
namespace {

// Two complex doubles per register, interleaved (re0 im0 re1 im1).
inline __m256d cmul_scalar(__m256d x, __m256d ar, __m256d ai) {
  const __m256d xs = _mm256_permute_pd(x, 0b0101);  // im0 re0 im1 re1
  return _mm256_fmaddsub_pd(x, ar, _mm256_mul_pd(xs, ai));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void caxpy_avx2(cd alpha, const cd* x, cd* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  auto* xp = reinterpret_cast<const double*>(x);
  auto* yp = reinterpret_cast<double*>(y);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x0 = _mm256_loadu_pd(xp + 2 * i);
    const __m256d x1 = _mm256_loadu_pd(xp + 2 * i + 4);
    const __m256d y0 = _mm256_loadu_pd(yp + 2 * i);
    const __m256d y1 = _mm256_loadu_pd(yp + 2 * i + 4);
    _mm256_storeu_pd(yp + 2 * i, _mm256_add_pd(y0, cmul_scalar(x0, ar, ai)));
    _mm256_storeu_pd(yp + 2 * i + 4, _mm256_add_pd(y1, cmul_scalar(x1, ar, ai)));
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d x0 = _mm256_loadu_pd(xp + 2 * i);
    const __m256d y0 = _mm256_loadu_pd(yp + 2 * i);
    _mm256_storeu_pd(yp + 2 * i, _mm256_add_pd(y0, cmul_scalar(x0, ar, ai)));
  }
  for (; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    y[i] = cd(y[i].real() + (alpha.real() * xr - alpha.imag() * xi),
              y[i].imag() + (alpha.real() * xi + alpha.imag() * xr));
  }
}

void cscal_avx2(cd alpha, const cd* x, cd* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  auto* xp = reinterpret_cast<const double*>(x);
  auto* yp = reinterpret_cast<double*>(y);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    _mm256_storeu_pd(yp + 2 * i, cmul_scalar(_mm256_loadu_pd(xp + 2 * i), ar, ai));
  }
  for (; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    y[i] = cd(alpha.real() * xr - alpha.imag() * xi, alpha.real() * xi + alpha.imag() * xr);
  }
}

cd cdotc_avx2(const cd* x, const cd* y, std::size_t n) {
  auto* xp = reinterpret_cast<const double*>(x);
  auto* yp = reinterpret_cast<const double*>(y);
  __m256d acc_re = _mm256_setzero_pd();  // xr*yr, xi*yi
  __m256d acc_im = _mm256_setzero_pd();  // xr*yi, xi*yr
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xp + 2 * i);
    const __m256d yv = _mm256_loadu_pd(yp + 2 * i);
    acc_re = _mm256_fmadd_pd(xv, yv, acc_re);
    acc_im = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0b0101), acc_im);
  }
  double re = hsum(acc_re);
  // lanes: xr*yi (+), xi*yr (-)
  const __m256d sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
  double im = hsum(_mm256_mul_pd(acc_im, sign));
  for (; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

double cnorm2_avx2(const cd* x, std::size_t n) {
  auto* xp = reinterpret_cast<const double*>(x);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(xp + 2 * i);
    const __m256d b = _mm256_loadu_pd(xp + 2 * i + 4);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d a = _mm256_loadu_pd(xp + 2 * i);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return acc;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t{Isa::avx2, caxpy_avx2, cscal_avx2, cdotc_avx2, cnorm2_avx2};
  return &t;
}

}  // namespace mmep::kernels::detail
