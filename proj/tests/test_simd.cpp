#include "awt/simd/kernels.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace awt::simd;

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

} // namespace

TEST_CASE("scalar kernels match direct loops") {
  const auto &k = kernels(Isa::scalar);
  std::mt19937_64 rng(11);
  std::normal_distribution<float> g;
  for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 15u, 16u, 17u, 512u, 1000u}) {
    std::vector<float> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = g(rng);
    }
    long double d = 0, s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d += (long double)x[i] * y[i];
      s += (long double)x[i] * x[i];
    }
    CHECK(rel_err(k.dot_f32(x.data(), y.data(), n), double(d)) < 1e-12);
    CHECK(rel_err(k.sum_squares_f32(x.data(), n), double(s)) < 1e-12);
  }
}

TEST_CASE("AVX2 kernels agree with the scalar kernels") {
  if (!supported(Isa::avx2)) {
    MESSAGE("AVX2 not available on this machine; equivalence not exercised");
    return;
  }
  const auto &s = kernels(Isa::scalar);
  const auto &v = kernels(Isa::avx2);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = trial % 70;
    const std::size_t m = 1 + trial % 53;
    std::vector<float> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = float(g(rng));
      y[i] = float(g(rng));
    }
    CHECK(rel_err(v.dot_f32(x.data(), y.data(), n), s.dot_f32(x.data(), y.data(), n)) < 1e-12);
    CHECK(rel_err(v.sum_squares_f32(x.data(), n), s.sum_squares_f32(x.data(), n)) < 1e-12);

    const std::size_t rows = std::max<std::size_t>(1, n);
    std::vector<double> mat(rows * m), xr(m), xc(rows), y1(rows), y2(rows), z1(m), z2(m);
    for (auto &e : mat)
      e = std::abs(g(rng));
    for (auto &e : xr)
      e = std::abs(g(rng));
    for (auto &e : xc)
      e = std::abs(g(rng));
    s.gemv(mat.data(), rows, m, xr.data(), y1.data());
    v.gemv(mat.data(), rows, m, xr.data(), y2.data());
    for (std::size_t i = 0; i < rows; ++i)
      CHECK(rel_err(y2[i], y1[i]) < 1e-12);
    s.gemv_t(mat.data(), rows, m, xc.data(), z1.data());
    v.gemv_t(mat.data(), rows, m, xc.data(), z2.data());
    for (std::size_t j = 0; j < m; ++j)
      CHECK(rel_err(z2[j], z1[j]) < 1e-12);
  }
}

TEST_CASE("gemv and gemv_t compute M x and M^T x") {
  const auto &k = active();
  const std::vector<double> m = {1, 2, 3, 4, 5, 6}; // 2 x 3
  const std::vector<double> x3 = {1, 0, -1};
  const std::vector<double> x2 = {2, -1};
  std::vector<double> y(2), z(3);
  k.gemv(m.data(), 2, 3, x3.data(), y.data());
  CHECK(y == std::vector<double>{-2, -2});
  k.gemv_t(m.data(), 2, 3, x2.data(), z.data());
  CHECK(z == std::vector<double>{-2, -1, 0});
}

TEST_CASE("dispatch reports a usable instruction set") {
  CHECK(supported(Isa::scalar));
  CHECK(supported(active_isa()));
  CHECK_FALSE(to_string(active_isa()).empty());
}
