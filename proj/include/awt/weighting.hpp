#pragma once

// Baseline cosine classifier, prediction entropy, and entropy-based
// importance weights for image views and class descriptions.

#include "awt/core_types.hpp"
#include "awt/numerics.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace awt {

struct ViewWeights {
  DiscreteMeasure weights;
  std::vector<double> entropies; // nats, one per view
};

/// softmax(<class_j, image> / tau) over the rows of `class_embs`.
/// Throws DimensionMismatch or InvalidTemperature (tau <= 0).
ClassProbabilities classify_cosine(std::span<const float> image,
                                   const EmbeddingMatrix &class_embs, double tau);

/// softmax(-H / gamma): lower entropy, larger weight.
DiscreteMeasure entropy_weights(std::span<const double> entropies, double gamma);

/// Weights each image view by the confidence of its prediction against the
/// fixed averaged class embeddings (one row per class, C >= 2).
ViewWeights weight_image_views(const EmbeddingMatrix &views,
                               const EmbeddingMatrix &class_mean_embs,
                               double gamma_v, double tau);

/// Weights the descriptions of class `class_index`. For each description the
/// candidate set is that description plus the averaged embeddings of every
/// other class (`other_class_means`, C - 1 rows); only the original image
/// view is classified.
ViewWeights weight_class_descriptions(std::span<const float> original_image,
                                      std::size_t class_index,
                                      const EmbeddingMatrix &desc_embs,
                                      const EmbeddingMatrix &other_class_means,
                                      double gamma_t, double tau);

/// Same weights from precomputed logits: `desc_logits[m]` is
/// <desc_m, I0> / tau and `other_logits` holds <mean_j, I0> / tau for the
/// other classes. Runs in O(M + C) by folding the fixed part of the
/// partition function once.
ViewWeights weight_descriptions_from_logits(std::span<const double> desc_logits,
                                            std::span<const double> other_logits,
                                            double gamma_t);

void check_temperature(double value, const char *name);

} // namespace awt
