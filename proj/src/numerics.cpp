#include "awt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace awt {

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best])
      best = i;
  return best;
}

std::size_t ClassProbabilities::argmax() const noexcept {
  return awt::argmax(logits.empty() ? std::span<const double>(probs)
                                    : std::span<const double>(logits));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty())
    return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top))
    return top;
  double acc = 0.0;
  for (double v : values)
    acc += std::exp(v - top);
  return top + std::log(acc);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty())
    return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double &p : out)
    p /= total;
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = logits[i] - lse;
  return out;
}

ClassProbabilities make_probabilities(std::vector<double> logits) {
  ClassProbabilities p;
  p.probs = softmax(logits);
  p.logits = std::move(logits);
  return p;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0)
      h -= p * std::log(p);
  return std::max(h, 0.0);
}

double entropy(const ClassProbabilities &p) { return entropy(p.probs); }

} // namespace awt
