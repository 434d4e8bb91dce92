#pragma once

// Data-parallel inner loops used by the cost-matrix builder and the
// standard-domain Sinkhorn iterations. Every routine has a scalar reference
// implementation; wider variants are picked once at runtime from what the
// CPU reports. All variants read 32-bit floats and accumulate in 64 bits.
//
// Setting AWT_SIMD=scalar in the environment pins the scalar table.

#include <cstddef>
#include <span>
#include <string_view>

namespace awt::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;

struct Kernels {
  // sum_k x[k] * y[k]
  double (*dot_f32)(const float *x, const float *y, std::size_t n);
  // sum_k x[k]^2
  double (*sum_squares_f32)(const float *x, std::size_t n);
  // y = M x, M row-major rows x cols
  void (*gemv)(const double *m, std::size_t rows, std::size_t cols,
               const double *x, double *y);
  // y = M^T x, M row-major rows x cols
  void (*gemv_t)(const double *m, std::size_t rows, std::size_t cols,
                 const double *x, double *y);
};

bool supported(Isa isa) noexcept;

// Throws awt::Error(InvalidArgument) when the variant is not compiled in or
// the CPU lacks the instructions.
const Kernels &kernels(Isa isa);

// Best supported variant, honouring AWT_SIMD. Resolved on first call.
Isa active_isa() noexcept;
const Kernels &active() noexcept;

inline double dot(std::span<const float> x, std::span<const float> y) {
  return active().dot_f32(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

inline double sum_squares(std::span<const float> x) {
  return active().sum_squares_f32(x.data(), x.size());
}

} // namespace awt::simd
