#include "awt/error.hpp"
#include "awt/simd/kernels.hpp"
#include "awt/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace awt {

namespace {

constexpr double kMaskBelow = 1e-12;

struct Subproblem {
  std::vector<std::size_t> rows; // original indices kept
  std::vector<std::size_t> cols;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> cost; // rows.size() x cols.size()
};

Subproblem mask(const CostMatrix &c, const DiscreteMeasure &a, const DiscreteMeasure &b) {
  Subproblem s;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] >= kMaskBelow) {
      s.rows.push_back(i);
      s.a.push_back(a[i]);
    }
  for (std::size_t j = 0; j < b.size(); ++j)
    if (b[j] >= kMaskBelow) {
      s.cols.push_back(j);
      s.b.push_back(b[j]);
    }
  s.cost.reserve(s.rows.size() * s.cols.size());
  for (std::size_t i : s.rows)
    for (std::size_t j : s.cols)
      s.cost.push_back(c(i, j));
  return s;
}

struct Iterate {
  std::vector<double> plan;
  bool converged = false;
  int iterations = 0;
};

Iterate solve_standard(const Subproblem &s, const SinkhornConfig &cfg) {
  const std::size_t n = s.a.size();
  const std::size_t m = s.b.size();
  const auto &k = simd::active();

  std::vector<double> kernel(n * m);
  for (std::size_t q = 0; q < kernel.size(); ++q)
    kernel[q] = std::exp(-s.cost[q] / cfg.epsilon);

  std::vector<double> u(n, 1.0), v(m, 1.0), kv(n), ktu(m);
  Iterate out;
  k.gemv(kernel.data(), n, m, v.data(), kv.data());
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    out.iterations = it;
    for (std::size_t i = 0; i < n; ++i)
      u[i] = s.a[i] / kv[i];
    k.gemv_t(kernel.data(), n, m, u.data(), ktu.data());
    for (std::size_t j = 0; j < m; ++j)
      v[j] = s.b[j] / ktu[j];
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(u[i]) || u[i] <= 0.0)
        throw Error(Errc::NumericalOverflow,
                    "row scaling factor " + std::to_string(i) + " is not finite at iteration " +
                        std::to_string(it) + "; enable the log domain for small epsilon");
    for (std::size_t j = 0; j < m; ++j)
      if (!std::isfinite(v[j]) || v[j] <= 0.0)
        throw Error(Errc::NumericalOverflow,
                    "column scaling factor " + std::to_string(j) +
                        " is not finite at iteration " + std::to_string(it) +
                        "; enable the log domain for small epsilon");

    // Columns match b by construction after the v update; rows are checked.
    k.gemv(kernel.data(), n, m, v.data(), kv.data());
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      err = std::max(err, std::abs(u[i] * kv[i] - s.a[i]));
    if (err <= cfg.tolerance) {
      out.converged = true;
      break;
    }
  }

  out.plan.resize(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out.plan[i * m + j] = u[i] * kernel[i * m + j] * v[j];
  return out;
}

// Max-norm row-marginal error of the plan given by potentials (f, g).
double row_error(const Subproblem &s, std::span<const double> f, std::span<const double> g,
                 double eps) {
  const std::size_t n = s.a.size();
  const std::size_t m = s.b.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      r += std::exp((f[i] + g[j] - s.cost[i * m + j]) / eps);
    err = std::max(err, std::abs(r - s.a[i]));
  }
  return err;
}

Iterate solve_log(const Subproblem &s, const SinkhornConfig &cfg) {
  const std::size_t n = s.a.size();
  const std::size_t m = s.b.size();

  std::vector<double> log_a(n), log_b(m);
  for (std::size_t i = 0; i < n; ++i)
    log_a[i] = std::log(s.a[i]);
  for (std::size_t j = 0; j < m; ++j)
    log_b[j] = std::log(s.b[j]);

  // Dual potentials f, g; plan = exp((f_i + g_j - C_ij) / eps).
  std::vector<double> f(n, 0.0), g(m, 0.0), scratch(std::max(n, m));
  const auto sweep = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j)
        scratch[j] = (g[j] - s.cost[i * m + j]) / eps;
      f[i] = eps * (log_a[i] - log_sum_exp(std::span<const double>(scratch.data(), m)));
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i)
        scratch[i] = (f[i] - s.cost[i * m + j]) / eps;
      g[j] = eps * (log_b[j] - log_sum_exp(std::span<const double>(scratch.data(), n)));
    }
  };

  // Warm start: halve epsilon from the cost scale down to the target, each
  // stage run to a loose tolerance. Same fixed point, far fewer iterations
  // when epsilon is small relative to the costs.
  // The warm-up gets at most half of the iteration budget.
  Iterate out;
  std::vector<double> stages;
  for (double eps = 1.0; eps > 2.0 * cfg.epsilon; eps *= 0.5)
    stages.push_back(eps);
  const double stage_tol = std::max(cfg.tolerance, 1e-2);
  const int per_stage =
      stages.empty() ? 0 : cfg.max_iterations / (2 * static_cast<int>(stages.size()));
  for (double eps : stages) {
    for (int k = 0; k < per_stage; ++k) {
      ++out.iterations;
      sweep(eps);
      if (row_error(s, f, g, eps) <= stage_tol)
        break;
    }
  }
  while (out.iterations < cfg.max_iterations) {
    ++out.iterations;
    sweep(cfg.epsilon);
    if (row_error(s, f, g, cfg.epsilon) <= cfg.tolerance) {
      out.converged = true;
      break;
    }
  }

  out.plan.resize(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out.plan[i * m + j] = std::exp((f[i] + g[j] - s.cost[i * m + j]) / cfg.epsilon);
  return out;
}

// Shrinks over-full rows then columns, and spreads the remaining deficit as a
// rank-one correction, so the plan has exactly the requested marginals.
void round_to_polytope(std::vector<double> &plan, std::span<const double> a,
                       std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      r += plan[i * m + j];
    if (r > a[i]) {
      const double x = a[i] / r;
      for (std::size_t j = 0; j < m; ++j)
        plan[i * m + j] *= x;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      c += plan[i * m + j];
    if (c > b[j]) {
      const double y = b[j] / c;
      for (std::size_t i = 0; i < n; ++i)
        plan[i * m + j] *= y;
    }
  }
  std::vector<double> err_r(n), err_c(m);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      r += plan[i * m + j];
    err_r[i] = std::max(a[i] - r, 0.0);
    total += err_r[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      c += plan[i * m + j];
    err_c[j] = std::max(b[j] - c, 0.0);
  }
  if (total <= 0.0)
    return;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      plan[i * m + j] += err_r[i] * err_c[j] / total;
}

} // namespace

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(Errc::InvalidArgument, "sinkhorn epsilon must be positive");
  if (max_iterations < 1)
    throw Error(Errc::InvalidArgument, "sinkhorn max_iterations must be >= 1");
  if (!(tolerance > 0.0))
    throw Error(Errc::InvalidArgument, "sinkhorn tolerance must be positive");
}

OtResult sinkhorn(const CostMatrix &cost, const DiscreteMeasure &a,
                  const DiscreteMeasure &b, const SinkhornConfig &cfg) {
  cfg.validate();
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw Error(Errc::ShapeMismatch,
                "cost is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) +
                    " but measures have " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " points");

  const Subproblem sub = mask(cost, a, b);
  const std::size_t n = sub.a.size();
  const std::size_t m = sub.b.size();

  Iterate it;
  if (n == 1 || m == 1) {
    // A single source or target admits exactly one coupling.
    it.plan.resize(n * m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        it.plan[i * m + j] = sub.a[i] * sub.b[j];
    it.converged = true;
  } else {
    it = cfg.uses_log_domain() ? solve_log(sub, cfg) : solve_standard(sub, cfg);
    if (cfg.round_to_feasible)
      round_to_polytope(it.plan, sub.a, sub.b);
  }

  OtResult result;
  TransportPlan &plan = result.plan;
  plan.rows = cost.rows();
  plan.cols = cost.cols();
  plan.mass.assign(plan.rows * plan.cols, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      plan.mass[sub.rows[i] * plan.cols + sub.cols[j]] = it.plan[i * m + j];
  plan.converged = it.converged;
  plan.iterations = it.iterations;
  plan.marginal_violation = marginal_violation(plan, a, b);
  result.cost = transport_cost(cost, plan);
  return result;
}

} // namespace awt
