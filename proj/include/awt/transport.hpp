#pragma once

// Entropy-regularized optimal transport between weighted view sets, an exact
// transportation-simplex solver for small instances, and the OT-distance
// classifier.

#include "awt/core_types.hpp"
#include "awt/numerics.hpp"

#include <optional>
#include <span>

namespace awt {

struct SinkhornConfig {
  double epsilon = 0.1;
  int max_iterations = 100;
  // Max-norm marginal violation that counts as converged.
  double tolerance = 1e-6;
  // Log-sum-exp updates. Unset: enabled when epsilon < 0.05.
  std::optional<bool> log_domain;
  // Project the final iterate onto the coupling polytope so both marginals
  // hold to rounding error.
  bool round_to_feasible = true;

  bool uses_log_domain() const noexcept {
    return log_domain.value_or(epsilon < kAutoLogDomainBelow);
  }
  void validate() const;

  static constexpr double kAutoLogDomainBelow = 0.05;
};

/// Sinkhorn scaling on the Gibbs kernel exp(-C / epsilon). Points whose weight
/// is below 1e-12 are masked out and get zero plan rows/columns. The returned
/// cost is <C, P> without the entropy term.
///
/// Throws ShapeMismatch when C does not match (|a|, |b|), NumericalOverflow
/// when a scaling factor stops being finite (standard domain only).
OtResult sinkhorn(const CostMatrix &cost, const DiscreteMeasure &a,
                  const DiscreteMeasure &b, const SinkhornConfig &cfg = {});

/// Exact optimum of the transportation LP (north-west corner start, MODI
/// pivoting). Intended for verification: |a| + |b| <= kExactOtMaxPoints.
OtResult exact_ot(const CostMatrix &cost, const DiscreteMeasure &a,
                  const DiscreteMeasure &b);

inline constexpr std::size_t kExactOtMaxPoints = 64;

/// cosine_cost followed by sinkhorn.
OtResult awt_distance(const EmbeddingMatrix &img_views, const DiscreteMeasure &a,
                      const EmbeddingMatrix &desc_views, const DiscreteMeasure &b,
                      const SinkhornConfig &cfg = {});

/// softmax(-cost_i / tau): the class with the smallest transport distance is
/// the most probable.
ClassProbabilities classify_ot(std::span<const double> ot_costs, double tau);

} // namespace awt
