#pragma once

// Shared numerical data model: embedding matrices, discrete measures, cost
// matrices and transport plans. All types are immutable after construction.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace awt {

/// Row-major matrix of 32-bit feature vectors, one row per view or
/// description. Entries are finite; rows >= 1 and dim >= 1.
class EmbeddingMatrix {
public:
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  static EmbeddingMatrix
  from_rows(std::initializer_list<std::initializer_list<float>> rows);
  static EmbeddingMatrix from_rows(const std::vector<std::vector<float>> &rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const noexcept { return data_; }

  // First `count` rows (row 0 first). count must be in [1, rows()].
  EmbeddingMatrix head(std::size_t count) const;

  friend bool operator==(const EmbeddingMatrix &, const EmbeddingMatrix &) = default;

private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<float> data_;
};

/// Probability weights over the rows of an associated matrix.
/// Non-negative, summing to one within 1e-9.
class DiscreteMeasure {
public:
  explicit DiscreteMeasure(std::vector<double> weights);

  static DiscreteMeasure uniform(std::size_t n);
  // Divides by the total; throws on negative/non-finite entries or zero mass.
  static DiscreteMeasure normalized(std::vector<double> mass);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }

private:
  std::vector<double> weights_;
};

/// Transport costs, rows x cols. Entries are finite and lie in [0, 2], the
/// range of cosine distance between unit vectors. Stored in 64 bits.
class CostMatrix {
public:
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static CostMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }
  std::span<const double> data() const noexcept { return data_; }
  double max_entry() const noexcept;

  CostMatrix transposed() const;

private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// Non-negative coupling between two measures plus solver diagnostics.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> mass; // row-major
  bool converged = false;
  int iterations = 0;
  double marginal_violation = 0.0; // max |P1 - a|, |P^T 1 - b|

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return mass[i * cols + j];
  }
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  double total_mass() const;
};

struct OtResult {
  double cost = 0.0; // <C, P>, unregularized
  TransportPlan plan;
};

// max(|P1 - a|_inf, |P^T 1 - b|_inf)
double marginal_violation(const TransportPlan &plan, const DiscreteMeasure &a,
                          const DiscreteMeasure &b);

// <C, P>
double transport_cost(const CostMatrix &cost, const TransportPlan &plan);

// Divides each row by its L2 norm. Rows whose norm is already within 1e-6 of
// one are copied unchanged, which makes the operation bit-idempotent.
// Throws ZeroNormRow when a row norm is below 1e-12.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix &m);

// C[n][m] = 1 - <img_n, txt_m>, clamped to [0, 2]. Inputs must be
// row-normalized and share dim (DimensionMismatch otherwise).
CostMatrix cosine_cost(const EmbeddingMatrix &img, const EmbeddingMatrix &txt);

// Arithmetic mean of the rows, re-normalized to unit length unless
// `renormalize` is false. Throws ZeroNormRow when the mean vanishes.
std::vector<float> mean_embedding(const EmbeddingMatrix &m, bool renormalize = true);

// Stacks one vector per row.
EmbeddingMatrix stack_rows(const std::vector<std::vector<float>> &rows);

} // namespace awt
