#include "awt/core_types.hpp"

#include "awt/error.hpp"
#include "awt/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace awt {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
  case Errc::InvalidArgument: return "InvalidArgument";
  case Errc::ZeroNormRow: return "ZeroNormRow";
  case Errc::DimensionMismatch: return "DimensionMismatch";
  case Errc::ShapeMismatch: return "ShapeMismatch";
  case Errc::InvalidTemperature: return "InvalidTemperature";
  case Errc::TooFewClasses: return "TooFewClasses";
  case Errc::EmptyClassSet: return "EmptyClassSet";
  case Errc::NumericalOverflow: return "NumericalOverflow";
  case Errc::SizeLimitExceeded: return "SizeLimitExceeded";
  case Errc::InsufficientViews: return "InsufficientViews";
  case Errc::UnknownId: return "UnknownId";
  case Errc::IoError: return "IoError";
  case Errc::BadMagic: return "BadMagic";
  case Errc::UnsupportedDtype: return "UnsupportedDtype";
  case Errc::UnsupportedOrder: return "UnsupportedOrder";
  case Errc::UnsupportedShape: return "UnsupportedShape";
  case Errc::TruncatedPayload: return "TruncatedPayload";
  case Errc::SchemaError: return "SchemaError";
  case Errc::ManifestError: return "ManifestError";
  case Errc::UnparseableReply: return "UnparseableReply";
  case Errc::MissingPlaceholder: return "MissingPlaceholder";
  case Errc::ClientError: return "ClientError";
  case Errc::QuotaExhausted: return "QuotaExhausted";
  }
  return "Unknown";
}

namespace {

constexpr double kZeroNorm = 1e-12;
constexpr double kUnitSlack = 1e-6;
constexpr double kMassSlack = 1e-9;

} // namespace

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (rows_ == 0 || dim_ == 0)
    throw Error(Errc::InvalidArgument, "embedding matrix must have rows >= 1 and dim >= 1");
  if (data_.size() != rows_ * dim_)
    throw Error(Errc::ShapeMismatch,
                "embedding data has " + std::to_string(data_.size()) +
                    " entries, expected " + std::to_string(rows_ * dim_));
  for (std::size_t k = 0; k < data_.size(); ++k)
    if (!std::isfinite(data_[k]))
      throw Error(Errc::InvalidArgument,
                  "non-finite embedding entry at row " + std::to_string(k / dim_));
}

EmbeddingMatrix EmbeddingMatrix::from_rows(
    std::initializer_list<std::initializer_list<float>> rows) {
  std::vector<std::vector<float>> copy;
  for (const auto &r : rows)
    copy.emplace_back(r);
  return from_rows(copy);
}

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<float>> &rows) {
  return stack_rows(rows);
}

EmbeddingMatrix EmbeddingMatrix::head(std::size_t count) const {
  if (count == 0 || count > rows_)
    throw Error(Errc::InvalidArgument, "head(" + std::to_string(count) +
                                           ") out of range for " +
                                           std::to_string(rows_) + " rows");
  if (count == rows_)
    return *this;
  return EmbeddingMatrix(count, dim_,
                         std::vector<float>(data_.begin(), data_.begin() + count * dim_));
}

EmbeddingMatrix stack_rows(const std::vector<std::vector<float>> &rows) {
  if (rows.empty())
    throw Error(Errc::InvalidArgument, "cannot stack zero rows");
  const std::size_t dim = rows.front().size();
  std::vector<float> data;
  data.reserve(rows.size() * dim);
  for (const auto &r : rows) {
    if (r.size() != dim)
      throw Error(Errc::DimensionMismatch, "rows have differing lengths");
    data.insert(data.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(rows.size(), dim, std::move(data));
}

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty())
    throw Error(Errc::InvalidArgument, "measure must have at least one point");
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0)
      throw Error(Errc::InvalidArgument, "measure weights must be finite and non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > kMassSlack)
    throw Error(Errc::InvalidArgument,
                "measure weights sum to " + std::to_string(total) + ", expected 1");
}

DiscreteMeasure DiscreteMeasure::uniform(std::size_t n) {
  if (n == 0)
    throw Error(Errc::InvalidArgument, "uniform measure over zero points");
  return DiscreteMeasure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure DiscreteMeasure::normalized(std::vector<double> mass) {
  double total = 0.0;
  for (double w : mass) {
    if (!std::isfinite(w) || w < 0.0)
      throw Error(Errc::InvalidArgument, "measure weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0))
    throw Error(Errc::InvalidArgument, "measure has zero total mass");
  for (double &w : mass)
    w /= total;
  return DiscreteMeasure(std::move(mass));
}

// ---------------------------------------------------------------------------
// CostMatrix

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows_ == 0 || cols_ == 0)
    throw Error(Errc::InvalidArgument, "cost matrix must be non-empty");
  if (data_.size() != rows_ * cols_)
    throw Error(Errc::ShapeMismatch, "cost data size does not match its shape");
  for (double c : data_)
    if (!std::isfinite(c) || c < 0.0 || c > 2.0)
      throw Error(Errc::InvalidArgument,
                  "cost entries must be finite and within [0, 2], got " + std::to_string(c));
}

CostMatrix CostMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.begin()->size() : 0;
  std::vector<double> data;
  for (const auto &r : rows) {
    if (r.size() != m)
      throw Error(Errc::ShapeMismatch, "ragged cost rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return CostMatrix(n, m, std::move(data));
}

double CostMatrix::max_entry() const noexcept {
  return *std::max_element(data_.begin(), data_.end());
}

CostMatrix CostMatrix::transposed() const {
  std::vector<double> t(data_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      t[j * rows_ + i] = data_[i * cols_ + j];
  return CostMatrix(cols_, rows_, std::move(t));
}

// ---------------------------------------------------------------------------
// TransportPlan

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i] += mass[i * cols + j];
  return out;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> out(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[j] += mass[i * cols + j];
  return out;
}

double TransportPlan::total_mass() const {
  double total = 0.0;
  for (double p : mass)
    total += p;
  return total;
}

double marginal_violation(const TransportPlan &plan, const DiscreteMeasure &a,
                          const DiscreteMeasure &b) {
  double worst = 0.0;
  const auto r = plan.row_sums();
  const auto c = plan.col_sums();
  for (std::size_t i = 0; i < r.size(); ++i)
    worst = std::max(worst, std::abs(r[i] - a[i]));
  for (std::size_t j = 0; j < c.size(); ++j)
    worst = std::max(worst, std::abs(c[j] - b[j]));
  return worst;
}

double transport_cost(const CostMatrix &cost, const TransportPlan &plan) {
  double total = 0.0;
  const auto c = cost.data();
  for (std::size_t k = 0; k < plan.mass.size(); ++k)
    total += c[k] * plan.mass[k];
  return total;
}

// ---------------------------------------------------------------------------
// Operations

EmbeddingMatrix normalize_rows(const EmbeddingMatrix &m) {
  std::vector<float> out(m.data().begin(), m.data().end());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double norm = std::sqrt(simd::sum_squares(m.row(i)));
    if (norm < kZeroNorm)
      throw Error(Errc::ZeroNormRow, "row " + std::to_string(i) + " has zero norm");
    if (std::abs(norm - 1.0) <= kUnitSlack)
      continue;
    float *row = out.data() + i * m.dim();
    for (std::size_t k = 0; k < m.dim(); ++k)
      row[k] = static_cast<float>(static_cast<double>(row[k]) / norm);
  }
  return EmbeddingMatrix(m.rows(), m.dim(), std::move(out));
}

CostMatrix cosine_cost(const EmbeddingMatrix &img, const EmbeddingMatrix &txt) {
  if (img.dim() != txt.dim())
    throw Error(Errc::DimensionMismatch,
                "image dim " + std::to_string(img.dim()) + " vs text dim " +
                    std::to_string(txt.dim()));
  const auto &k = simd::active();
  std::vector<double> c(img.rows() * txt.rows());
  for (std::size_t n = 0; n < img.rows(); ++n)
    for (std::size_t j = 0; j < txt.rows(); ++j) {
      const double cos = k.dot_f32(img.row(n).data(), txt.row(j).data(), img.dim());
      c[n * txt.rows() + j] = std::clamp(1.0 - cos, 0.0, 2.0);
    }
  return CostMatrix(img.rows(), txt.rows(), std::move(c));
}

std::vector<float> mean_embedding(const EmbeddingMatrix &m, bool renormalize) {
  std::vector<double> acc(m.dim(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t k = 0; k < m.dim(); ++k)
      acc[k] += r[k];
  }
  const double inv = 1.0 / static_cast<double>(m.rows());
  double sq = 0.0;
  for (double &v : acc) {
    v *= inv;
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm < kZeroNorm)
    throw Error(Errc::ZeroNormRow, "mean embedding vanishes");
  const double scale = renormalize ? 1.0 / norm : 1.0;
  std::vector<float> out(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k)
    out[k] = static_cast<float>(acc[k] * scale);
  return out;
}

} // namespace awt
