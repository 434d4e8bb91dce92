#include "awt/error.hpp"
#include "tables.hpp"

#include <cstdlib>
#include <string>

namespace awt::simd {

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar:
    return "scalar";
  case Isa::avx2:
    return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar:
    return true;
  case Isa::avx2:
#if defined(AWT_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
  }
  return false;
}

const Kernels &kernels(Isa isa) {
  if (!supported(isa))
    throw Error(Errc::InvalidArgument,
                "kernel variant '" + std::string(to_string(isa)) + "' is not available");
#ifdef AWT_HAVE_AVX2_KERNELS
  if (isa == Isa::avx2)
    return detail::avx2_kernels;
#endif
  return detail::scalar_kernels;
}

namespace {

Isa resolve() noexcept {
  if (const char *forced = std::getenv("AWT_SIMD"); forced != nullptr) {
    const std::string_view want(forced);
    if (want == "scalar")
      return Isa::scalar;
    if (want == "avx2" && supported(Isa::avx2))
      return Isa::avx2;
  }
  return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

} // namespace

Isa active_isa() noexcept {
  static const Isa isa = resolve();
  return isa;
}

const Kernels &active() noexcept {
  static const Kernels &table = kernels(active_isa());
  return table;
}

} // namespace awt::simd
