#pragma once

// Augment-weight-transport classification: weight the image views and the
// class descriptions by prediction entropy, measure each image-to-class
// distance with entropic OT, and classify over the distances. Also hosts the
// simpler operating modes used for component ablations, batch evaluation and
// parameter sweeps.

#include "awt/core_types.hpp"
#include "awt/manifest.hpp"
#include "awt/numerics.hpp"
#include "awt/transport.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace awt {

enum class Mode {
  raw,        // original view vs raw class-name embedding
  ensemble,   // averaged views vs averaged class embeddings
  ot_uniform, // OT with uniform masses
  awt,        // OT with entropy-based masses
};

// How the ensemble mode combines image views.
enum class EnsembleSpace { embedding, probability };

std::string_view to_string(Mode mode) noexcept;
// Accepts "raw", "ensemble", "ot-uniform"/"ot_uniform", "awt".
Mode parse_mode(std::string_view text);

struct AwtConfig {
  std::size_t n_image_views = 50;  // N: augmented views used (row 0 is extra)
  std::size_t m_descriptions = 50; // M: descriptions used (class name is extra)
  double gamma_v = 0.5;
  double gamma_t = 0.5;
  double tau = 0.01;
  SinkhornConfig sinkhorn;
  Mode mode = Mode::awt;
  bool renormalize_class_means = true;
  EnsembleSpace ensemble_space = EnsembleSpace::embedding;
  // In awt mode, either side can fall back to uniform masses.
  bool weight_image_views = true;
  bool weight_descriptions = true;
  bool keep_plans = false;

  void validate() const;
};

/// Text-side state shared by every image: class matrices cut to M + 1 rows,
/// the raw class-name rows and the averaged class embeddings.
class TextContext {
public:
  TextContext(const std::vector<EmbeddingMatrix> &classes, const AwtConfig &cfg);

  std::size_t num_classes() const noexcept { return descriptions_.size(); }
  std::size_t dim() const noexcept { return means_.dim(); }
  const EmbeddingMatrix &descriptions(std::size_t class_index) const {
    return descriptions_.at(class_index);
  }
  const EmbeddingMatrix &class_means() const noexcept { return means_; }
  const EmbeddingMatrix &class_names() const noexcept { return names_; }

private:
  std::vector<EmbeddingMatrix> descriptions_;
  EmbeddingMatrix means_;
  EmbeddingMatrix names_;
};

struct ClassificationResult {
  std::string image_id;
  ClassProbabilities probs;
  std::size_t predicted_index = 0;
  std::vector<double> per_class_ot_cost; // OT modes only
  bool all_converged = true;
  // Filled when AwtConfig::keep_plans is set (OT modes).
  std::optional<DiscreteMeasure> image_weights;
  std::vector<DiscreteMeasure> description_weights;
  std::vector<TransportPlan> plans;
};

/// Row 0 of `image_views` must be the unaugmented view; row 0 of each class
/// matrix the raw class-name embedding. Throws DimensionMismatch or
/// EmptyClassSet.
ClassificationResult classify_image(const EmbeddingMatrix &image_views,
                                    const TextContext &text, const AwtConfig &cfg);
ClassificationResult classify_image(const EmbeddingMatrix &image_views,
                                    const std::vector<EmbeddingMatrix> &classes,
                                    const AwtConfig &cfg);

/// Manifest plus every embedding file it references, row-normalized.
struct LoadedTask {
  io::TaskManifest manifest;
  std::vector<EmbeddingMatrix> class_embeddings;
  std::vector<EmbeddingMatrix> image_views;
};

// Validates first; any diagnostic or unreadable file raises ManifestError
// naming the entry.
LoadedTask load_task(const io::TaskManifest &manifest);

struct ImageOutcome {
  ClassificationResult result;
  std::size_t label_index = 0;
};

struct EvaluationReport {
  double top1_accuracy = 0.0;
  std::vector<std::optional<double>> per_class_accuracy; // empty class -> nullopt
  std::size_t n_images = 0;
  std::size_t non_converged_solves = 0;
  AwtConfig config;
  std::string dataset_name;
  std::vector<std::string> class_names;
  std::vector<ImageOutcome> images;
};

/// Classifies every image across up to `jobs` worker threads (0 = hardware
/// concurrency). Output does not depend on `jobs`.
EvaluationReport evaluate(const LoadedTask &task, const AwtConfig &cfg, unsigned jobs = 1);
EvaluationReport evaluate(const io::TaskManifest &manifest, const AwtConfig &cfg,
                          unsigned jobs = 1);

enum class SweepAxis { n_views, m_descriptions, gamma_v, gamma_t, epsilon };

std::string_view to_string(SweepAxis axis) noexcept;
// Accepts "n", "m", "gamma-v"/"gamma_v", "gamma-t"/"gamma_t", "epsilon".
SweepAxis parse_axis(std::string_view text);

/// One report per value. N and M sweeps keep the first k + 1 rows and require
/// every file to have them (InsufficientViews otherwise).
std::vector<EvaluationReport> ablation_sweep(const LoadedTask &task, const AwtConfig &base,
                                             SweepAxis axis, std::span<const double> values,
                                             unsigned jobs = 1);

AwtConfig with_axis_value(const AwtConfig &base, SweepAxis axis, double value);

nlohmann::json config_to_json(const AwtConfig &cfg);
// {config, dataset, n_images, top1_accuracy, per_class_accuracy, per_image: [...]}
nlohmann::json report_to_json(const EvaluationReport &report, bool include_probs = true);

} // namespace awt
