#include "mmep/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mmep::kernels {

namespace detail {
#ifndef MMEP_HAVE_AVX2_KERNELS
const KernelTable* avx2_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select_active() {
  if (const char* forced = std::getenv("MMEP_KERNELS")) {
    const std::string name(forced);
    if (name == "scalar") return detail::scalar_table();
    if (name == "avx2" && isa_available(Isa::avx2)) return *detail::avx2_table();
  }
  if (isa_available(Isa::avx2)) return *detail::avx2_table();
  return detail::scalar_table();
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: {
      static const bool ok = detail::avx2_table() != nullptr && cpu_has_avx2_fma();
      return ok;
    }
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!isa_available(isa)) {
    throw std::runtime_error("kernel variant '" + std::string(isa_name(isa)) + "' is not available");
  }
  return isa == Isa::avx2 ? *detail::avx2_table() : detail::scalar_table();
}

const KernelTable& active() {
  static const KernelTable& t = select_active();
  return t;
}

}  // namespace mmep::kernels
