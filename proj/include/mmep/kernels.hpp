#pragma once

// Complex double inner-loop kernels with a scalar reference and an AVX2/FMA
// variant. The variant is picked once at runtime from CPU features; setting
// MMEP_KERNELS=scalar in the environment forces the reference path.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace mmep::kernels {

using cd = std::complex<double>;

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  /// y += alpha * x
  void (*caxpy)(cd alpha, const cd* x, cd* y, std::size_t n);
  /// y = alpha * x
  void (*cscal)(cd alpha, const cd* x, cd* y, std::size_t n);
  /// sum conj(x_i) * y_i
  cd (*cdotc)(const cd* x, const cd* y, std::size_t n);
  /// sum |x_i|^2
  double (*cnorm2)(const cd* x, std::size_t n);
};

/// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Throws std::runtime_error if the variant is unavailable.
const KernelTable& table(Isa isa);

/// The table selected for this process.
const KernelTable& active();

inline void caxpy(cd alpha, std::span<const cd> x, std::span<cd> y, const KernelTable& k = active()) {
  k.caxpy(alpha, x.data(), y.data(), x.size());
}
inline void cscal(cd alpha, std::span<const cd> x, std::span<cd> y, const KernelTable& k = active()) {
  k.cscal(alpha, x.data(), y.data(), x.size());
}
inline cd cdotc(std::span<const cd> x, std::span<const cd> y, const KernelTable& k = active()) {
  return k.cdotc(x.data(), y.data(), x.size());
}
inline double cnorm2(std::span<const cd> x, const KernelTable& k = active()) {
  return k.cnorm2(x.data(), x.size());
}

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace mmep::kernels
