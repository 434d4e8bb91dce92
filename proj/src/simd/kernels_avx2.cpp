// Compiled with -mavx2 -mfma; only reached after the dispatcher has checked
// CPU support.

#include "tables.hpp"

#include <immintrin.h>

namespace awt::simd::detail {

namespace {

// Fixed lane order for the horizontal reduction keeps results reproducible
// run to run.
inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_f32(const float *x, const float *y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256 xv = _mm256_loadu_ps(x + k);
    const __m256 yv = _mm256_loadu_ps(y + k);
    const __m256d xlo = _mm256_cvtps_pd(_mm256_castps256_ps128(xv));
    const __m256d ylo = _mm256_cvtps_pd(_mm256_castps256_ps128(yv));
    const __m256d xhi = _mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1));
    const __m256d yhi = _mm256_cvtps_pd(_mm256_extractf128_ps(yv, 1));
    acc0 = _mm256_fmadd_pd(xlo, ylo, acc0);
    acc1 = _mm256_fmadd_pd(xhi, yhi, acc1);
  }
  for (; k + 4 <= n; k += 4) {
    const __m256d xv = _mm256_cvtps_pd(_mm_loadu_ps(x + k));
    const __m256d yv = _mm256_cvtps_pd(_mm_loadu_ps(y + k));
    acc0 = _mm256_fmadd_pd(xv, yv, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k)
    acc += static_cast<double>(x[k]) * static_cast<double>(y[k]);
  return acc;
}

double sum_squares_f32(const float *x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256 xv = _mm256_loadu_ps(x + k);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(xv));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1));
    acc0 = _mm256_fmadd_pd(lo, lo, acc0);
    acc1 = _mm256_fmadd_pd(hi, hi, acc1);
  }
  for (; k + 4 <= n; k += 4) {
    const __m256d xv = _mm256_cvtps_pd(_mm_loadu_ps(x + k));
    acc0 = _mm256_fmadd_pd(xv, xv, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) {
    const double v = x[k];
    acc += v * v;
  }
  return acc;
}

void gemv(const double *m, std::size_t rows, std::size_t cols, const double *x,
          double *y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = m + i * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), acc);
    double s = hsum(acc);
    for (; j < cols; ++j)
      s += row[j] * x[j];
    y[i] = s;
  }
}

void gemv_t(const double *m, std::size_t rows, std::size_t cols,
            const double *x, double *y) {
  for (std::size_t j = 0; j < cols; ++j)
    y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = m + i * cols;
    const __m256d xi = _mm256_set1_pd(x[i]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d acc = _mm256_loadu_pd(y + j);
      _mm256_storeu_pd(y + j, _mm256_fmadd_pd(_mm256_loadu_pd(row + j), xi, acc));
    }
    for (; j < cols; ++j)
      y[j] += row[j] * x[i];
  }
}

} // namespace

const Kernels avx2_kernels{&dot_f32, &sum_squares_f32, &gemv, &gemv_t};

} // namespace awt::simd::detail
