#include "tables.hpp"

namespace awt::simd::detail {

namespace {

double dot_f32(const float *x, const float *y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    acc += static_cast<double>(x[k]) * static_cast<double>(y[k]);
  return acc;
}

double sum_squares_f32(const float *x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = x[k];
    acc += v * v;
  }
  return acc;
}

void gemv(const double *m, std::size_t rows, std::size_t cols, const double *x,
          double *y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = m + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j)
      acc += row[j] * x[j];
    y[i] = acc;
  }
}

void gemv_t(const double *m, std::size_t rows, std::size_t cols,
            const double *x, double *y) {
  for (std::size_t j = 0; j < cols; ++j)
    y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double *row = m + i * cols;
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j)
      y[j] += row[j] * xi;
  }
}

} // namespace

const Kernels scalar_kernels{&dot_f32, &sum_squares_f32, &gemv, &gemv_t};

} // namespace awt::simd::detail
