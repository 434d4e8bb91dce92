#include "awt/error.hpp"
#include "awt/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace awt {

namespace {

constexpr double kReducedCostTol = 1e-12;

// Basis of the transportation simplex: n + m - 1 cells forming a spanning
// tree of the bipartite row/column graph.
class TransportationSimplex {
public:
  TransportationSimplex(const CostMatrix &cost, std::span<const double> a,
                        std::span<const double> b)
      : n_(a.size()), m_(b.size()), cost_(cost), flow_(n_ * m_, 0.0),
        basic_(n_ * m_, false) {
    north_west_corner(a, b);
  }

  int solve() {
    const int bland_after = 50 * static_cast<int>(n_ + m_);
    const int hard_cap = 1000000;
    int pivots = 0;
    std::vector<double> u(n_), v(m_);
    while (true) {
      potentials(u, v);
      const std::size_t entering = pick_entering(u, v, pivots >= bland_after);
      if (entering == kNone)
        return pivots;
      pivot(entering);
      if (++pivots > hard_cap)
        throw Error(Errc::InvalidArgument, "transportation simplex failed to terminate");
    }
  }

  const std::vector<double> &flow() const { return flow_; }

private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  void north_west_corner(std::span<const double> a, std::span<const double> b) {
    std::vector<double> supply(a.begin(), a.end());
    std::vector<double> demand(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    while (true) {
      const double q = std::min(supply[i], demand[j]);
      flow_[i * m_ + j] = q;
      basic_[i * m_ + j] = true;
      const bool row_done = supply[i] <= demand[j];
      supply[i] -= q;
      demand[j] -= q;
      if (i == n_ - 1 && j == m_ - 1)
        break;
      if (i < n_ - 1 && (row_done || j == m_ - 1))
        ++i;
      else
        ++j;
    }
  }

  // Row node r is r, column node c is n_ + c.
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(n_ + m_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j)
        if (basic_[i * m_ + j]) {
          adj[i].push_back(n_ + j);
          adj[n_ + j].push_back(i);
        }
    return adj;
  }

  // u_i + v_j = C_ij on the basis, u_0 = 0.
  void potentials(std::vector<double> &u, std::vector<double> &v) const {
    const auto adj = adjacency();
    std::vector<bool> seen(n_ + m_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    u[0] = 0.0;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t next : adj[node]) {
        if (seen[next])
          continue;
        seen[next] = true;
        if (node < n_)
          v[next - n_] = cost_(node, next - n_) - u[node];
        else
          u[next] = cost_(next, node - n_) - v[node - n_];
        stack.push_back(next);
      }
    }
  }

  std::size_t pick_entering(const std::vector<double> &u, const std::vector<double> &v,
                            bool bland) const {
    std::size_t best = kNone;
    double best_rc = -kReducedCostTol;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        const std::size_t cell = i * m_ + j;
        if (basic_[cell])
          continue;
        const double rc = cost_(i, j) - u[i] - v[j];
        if (rc < best_rc) {
          if (bland)
            return cell;
          best_rc = rc;
          best = cell;
        }
      }
    return best;
  }

  // Path in the basis tree from row node of `entering` to its column node;
  // together with the entering cell it closes the pivot cycle.
  std::vector<std::size_t> cycle_path(std::size_t entering) const {
    const auto adj = adjacency();
    const std::size_t from = entering / m_;
    const std::size_t to = n_ + entering % m_;
    std::vector<std::size_t> parent(n_ + m_, kNone);
    std::vector<std::size_t> queue{from};
    parent[from] = from;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      if (node == to)
        break;
      for (std::size_t next : adj[node])
        if (parent[next] == kNone) {
          parent[next] = node;
          queue.push_back(next);
        }
    }
    // Walk back from the column node: cells alternate -, +, -, ...
    std::vector<std::size_t> cells;
    for (std::size_t node = to; node != from; node = parent[node]) {
      const std::size_t prev = parent[node];
      const std::size_t row = node < n_ ? node : prev;
      const std::size_t col = node < n_ ? prev - n_ : node - n_;
      cells.push_back(row * m_ + col);
    }
    return cells;
  }

  void pivot(std::size_t entering) {
    const auto path = cycle_path(entering);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = kNone;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const double x = flow_[path[k]];
      if (x < theta || (x == theta && path[k] < leaving)) {
        theta = x;
        leaving = path[k];
      }
    }
    theta = std::max(theta, 0.0);
    flow_[entering] = theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      double &x = flow_[path[k]];
      x += (k % 2 == 0) ? -theta : theta;
      if (x < 0.0)
        x = 0.0;
    }
    flow_[leaving] = 0.0;
    basic_[leaving] = false;
    basic_[entering] = true;
  }

  std::size_t n_;
  std::size_t m_;
  const CostMatrix &cost_;
  std::vector<double> flow_;
  std::vector<bool> basic_;
};

} // namespace

OtResult exact_ot(const CostMatrix &cost, const DiscreteMeasure &a,
                  const DiscreteMeasure &b) {
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw Error(Errc::ShapeMismatch,
                "cost is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) +
                    " but measures have " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " points");
  if (a.size() + b.size() > kExactOtMaxPoints)
    throw Error(Errc::SizeLimitExceeded,
                "exact solver handles at most " + std::to_string(kExactOtMaxPoints) +
                    " points in total, got " + std::to_string(a.size() + b.size()));

  TransportationSimplex simplex(cost, a.weights(), b.weights());
  const int pivots = simplex.solve();

  OtResult result;
  result.plan.rows = cost.rows();
  result.plan.cols = cost.cols();
  result.plan.mass = simplex.flow();
  result.plan.converged = true;
  result.plan.iterations = pivots;
  result.plan.marginal_violation = marginal_violation(result.plan, a, b);
  result.cost = transport_cost(cost, result.plan);
  return result;
}

} // namespace awt
