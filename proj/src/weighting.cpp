#include "awt/weighting.hpp"

#include "awt/error.hpp"
#include "awt/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace awt {

void check_temperature(double value, const char *name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw Error(Errc::InvalidTemperature,
                std::string(name) + " must be positive and finite, got " + std::to_string(value));
}

ClassProbabilities classify_cosine(std::span<const float> image,
                                   const EmbeddingMatrix &class_embs, double tau) {
  check_temperature(tau, "tau");
  if (image.size() != class_embs.dim())
    throw Error(Errc::DimensionMismatch,
                "image dim " + std::to_string(image.size()) + " vs class dim " +
                    std::to_string(class_embs.dim()));
  const auto &k = simd::active();
  std::vector<double> logits(class_embs.rows());
  for (std::size_t j = 0; j < class_embs.rows(); ++j)
    logits[j] = k.dot_f32(image.data(), class_embs.row(j).data(), image.size()) / tau;
  return make_probabilities(std::move(logits));
}

DiscreteMeasure entropy_weights(std::span<const double> entropies, double gamma) {
  check_temperature(gamma, "gamma");
  if (entropies.empty())
    throw Error(Errc::InvalidArgument, "no views to weight");
  std::vector<double> logits(entropies.size());
  for (std::size_t i = 0; i < entropies.size(); ++i)
    logits[i] = -entropies[i] / gamma;
  return DiscreteMeasure(softmax(logits));
}

ViewWeights weight_image_views(const EmbeddingMatrix &views,
                               const EmbeddingMatrix &class_mean_embs,
                               double gamma_v, double tau) {
  check_temperature(gamma_v, "gamma_v");
  if (class_mean_embs.rows() < 2)
    throw Error(Errc::TooFewClasses, "view weighting needs at least two classes");
  std::vector<double> h(views.rows());
  for (std::size_t n = 0; n < views.rows(); ++n)
    h[n] = entropy(classify_cosine(views.row(n), class_mean_embs, tau));
  DiscreteMeasure w = entropy_weights(h, gamma_v);
  return ViewWeights{std::move(w), std::move(h)};
}

ViewWeights weight_descriptions_from_logits(std::span<const double> desc_logits,
                                            std::span<const double> other_logits,
                                            double gamma_t) {
  check_temperature(gamma_t, "gamma_t");
  if (other_logits.empty())
    throw Error(Errc::TooFewClasses, "description weighting needs at least two classes");
  if (desc_logits.empty())
    throw Error(Errc::InvalidArgument, "class has no descriptions");

  // Fixed part of the partition function, shifted by its own max t:
  //   s_o = sum_j exp(l_j - t),  q_o = sum_j exp(l_j - t) (l_j - t).
  const double t = *std::max_element(other_logits.begin(), other_logits.end());
  double s_o = 0.0;
  double q_o = 0.0;
  for (double l : other_logits) {
    const double e = std::exp(l - t);
    s_o += e;
    q_o += e * (l - t);
  }

  std::vector<double> h(desc_logits.size());
  for (std::size_t m = 0; m < desc_logits.size(); ++m) {
    const double x = desc_logits[m];
    const double s = std::max(t, x);
    const double ro = std::exp(t - s);
    const double ex = std::exp(x - s);
    const double z = s_o * ro + ex;
    const double q = ro * (q_o + s_o * (t - s)) + ex * (x - s);
    // H = log Z - E[l - s]
    h[m] = std::max(std::log(z) - q / z, 0.0);
  }
  DiscreteMeasure w = entropy_weights(h, gamma_t);
  return ViewWeights{std::move(w), std::move(h)};
}

ViewWeights weight_class_descriptions(std::span<const float> original_image,
                                      std::size_t class_index,
                                      const EmbeddingMatrix &desc_embs,
                                      const EmbeddingMatrix &other_class_means,
                                      double gamma_t, double tau) {
  check_temperature(tau, "tau");
  if (class_index > other_class_means.rows())
    throw Error(Errc::InvalidArgument, "class index out of range");
  if (original_image.size() != desc_embs.dim() ||
      original_image.size() != other_class_means.dim())
    throw Error(Errc::DimensionMismatch, "image and text embeddings differ in dim");
  const auto &k = simd::active();
  const std::size_t d = original_image.size();
  std::vector<double> desc_logits(desc_embs.rows());
  for (std::size_t m = 0; m < desc_embs.rows(); ++m)
    desc_logits[m] = k.dot_f32(original_image.data(), desc_embs.row(m).data(), d) / tau;
  std::vector<double> other_logits(other_class_means.rows());
  for (std::size_t j = 0; j < other_class_means.rows(); ++j)
    other_logits[j] = k.dot_f32(original_image.data(), other_class_means.row(j).data(), d) / tau;
  return weight_descriptions_from_logits(desc_logits, other_logits, gamma_t);
}

} // namespace awt
