#pragma once

#include "awt/simd/kernels.hpp"

namespace awt::simd::detail {

extern const Kernels scalar_kernels;
#ifdef AWT_HAVE_AVX2_KERNELS
extern const Kernels avx2_kernels;
#endif

} // namespace awt::simd::detail
