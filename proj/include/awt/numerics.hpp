#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace awt {

/// A probability vector over classes together with the logits it came from.
struct ClassProbabilities {
  std::vector<double> logits;
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  // Index of the largest logit; lowest index wins ties.
  std::size_t argmax() const noexcept;
};

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

// log softmax via log-sum-exp.
std::vector<double> log_softmax(std::span<const double> logits);

double log_sum_exp(std::span<const double> values);

// Builds the probability vector from logits.
ClassProbabilities make_probabilities(std::vector<double> logits);

// Shannon entropy in nats, 0 log 0 := 0. Clamped at zero from below.
double entropy(std::span<const double> probs);
double entropy(const ClassProbabilities &p);

std::size_t argmax(std::span<const double> values) noexcept;

} // namespace awt
