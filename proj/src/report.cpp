#include "awt/pipeline.hpp"

#include <nlohmann/json.hpp>

namespace awt {

using nlohmann::json;

json config_to_json(const AwtConfig &cfg) {
  json sk = {{"epsilon", cfg.sinkhorn.epsilon},
             {"max_iterations", cfg.sinkhorn.max_iterations},
             {"tolerance", cfg.sinkhorn.tolerance},
             {"log_domain", cfg.sinkhorn.uses_log_domain()},
             {"round_to_feasible", cfg.sinkhorn.round_to_feasible}};
  return {{"mode", std::string(to_string(cfg.mode))},
          {"n_views", cfg.n_image_views},
          {"m_desc", cfg.m_descriptions},
          {"gamma_v", cfg.gamma_v},
          {"gamma_t", cfg.gamma_t},
          {"tau", cfg.tau},
          {"sinkhorn", std::move(sk)},
          {"renormalize_class_means", cfg.renormalize_class_means},
          {"ensemble_space",
           cfg.ensemble_space == EnsembleSpace::embedding ? "embedding" : "probability"},
          {"weight_image_views", cfg.weight_image_views},
          {"weight_descriptions", cfg.weight_descriptions}};
}

json report_to_json(const EvaluationReport &report, bool include_probs) {
  json per_image = json::array();
  for (const auto &o : report.images) {
    json entry = {{"id", o.result.image_id},
                  {"predicted", o.result.predicted_index},
                  {"label", o.label_index}};
    if (o.result.predicted_index < report.class_names.size())
      entry["predicted_name"] = report.class_names[o.result.predicted_index];
    if (include_probs)
      entry["probs"] = o.result.probs.probs;
    if (!o.result.per_class_ot_cost.empty())
      entry["ot_cost"] = o.result.per_class_ot_cost;
    per_image.push_back(std::move(entry));
  }
  json per_class = json::array();
  for (const auto &acc : report.per_class_accuracy)
    per_class.push_back(acc ? json(*acc) : json(nullptr));
  return {{"config", config_to_json(report.config)},
          {"dataset", report.dataset_name},
          {"n_images", report.n_images},
          {"top1_accuracy", report.top1_accuracy},
          {"per_class_accuracy", std::move(per_class)},
          {"non_converged_solves", report.non_converged_solves},
          {"per_image", std::move(per_image)}};
}

} // namespace awt
