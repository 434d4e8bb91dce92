#include "awt/error.hpp"
#include "awt/transport.hpp"
#include "awt/weighting.hpp"

namespace awt {

OtResult awt_distance(const EmbeddingMatrix &img_views, const DiscreteMeasure &a,
                      const EmbeddingMatrix &desc_views, const DiscreteMeasure &b,
                      const SinkhornConfig &cfg) {
  return sinkhorn(cosine_cost(img_views, desc_views), a, b, cfg);
}

ClassProbabilities classify_ot(std::span<const double> ot_costs, double tau) {
  check_temperature(tau, "tau");
  if (ot_costs.empty())
    throw Error(Errc::EmptyClassSet, "no class distances to classify");
  std::vector<double> logits(ot_costs.size());
  for (std::size_t i = 0; i < ot_costs.size(); ++i)
    logits[i] = -ot_costs[i] / tau;
  return make_probabilities(std::move(logits));
}

} // namespace awt
