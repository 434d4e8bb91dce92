#include "awt/pipeline.hpp"

#include "awt/error.hpp"
#include "awt/npy.hpp"
#include "awt/simd/kernels.hpp"
#include "awt/weighting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace awt {

namespace {

EmbeddingMatrix stack_class_means(const std::vector<EmbeddingMatrix> &classes, bool renormalize) {
  std::vector<std::vector<float>> rows;
  rows.reserve(classes.size());
  for (const auto &c : classes)
    rows.push_back(mean_embedding(c, renormalize));
  return stack_rows(rows);
}

EmbeddingMatrix stack_first_rows(const std::vector<EmbeddingMatrix> &classes) {
  std::vector<std::vector<float>> rows;
  rows.reserve(classes.size());
  for (const auto &c : classes)
    rows.emplace_back(c.row(0).begin(), c.row(0).end());
  return stack_rows(rows);
}

std::vector<EmbeddingMatrix> cut_classes(const std::vector<EmbeddingMatrix> &classes,
                                         std::size_t m) {
  if (classes.empty())
    throw Error(Errc::EmptyClassSet, "no classes to classify against");
  std::vector<EmbeddingMatrix> out;
  out.reserve(classes.size());
  for (const auto &c : classes) {
    if (c.dim() != classes.front().dim())
      throw Error(Errc::DimensionMismatch, "class embeddings differ in dim");
    out.push_back(c.head(std::min(c.rows(), m + 1)));
  }
  return out;
}

ClassificationResult classify_ot_modes(const EmbeddingMatrix &views, const TextContext &text,
                                       const AwtConfig &cfg) {
  const std::size_t c = text.num_classes();
  const bool weighted = cfg.mode == Mode::awt;
  const auto &k = simd::active();
  const auto image0 = views.row(0);

  DiscreteMeasure a = DiscreteMeasure::uniform(views.rows());
  if (weighted && cfg.weight_image_views && c >= 2 && views.rows() > 1)
    a = weight_image_views(views, text.class_means(), cfg.gamma_v, cfg.tau).weights;

  // <mean_j, I0> / tau, shared by every class's description weighting.
  std::vector<double> mean_logits(c);
  if (weighted && cfg.weight_descriptions && c >= 2)
    for (std::size_t j = 0; j < c; ++j)
      mean_logits[j] =
          k.dot_f32(image0.data(), text.class_means().row(j).data(), views.dim()) / cfg.tau;

  ClassificationResult out;
  out.per_class_ot_cost.resize(c);
  std::vector<double> others;
  std::vector<double> desc_logits;
  for (std::size_t i = 0; i < c; ++i) {
    const EmbeddingMatrix &desc = text.descriptions(i);
    DiscreteMeasure b = DiscreteMeasure::uniform(desc.rows());
    if (weighted && cfg.weight_descriptions && c >= 2 && desc.rows() > 1) {
      desc_logits.resize(desc.rows());
      for (std::size_t m = 0; m < desc.rows(); ++m)
        desc_logits[m] = k.dot_f32(image0.data(), desc.row(m).data(), views.dim()) / cfg.tau;
      others.clear();
      for (std::size_t j = 0; j < c; ++j)
        if (j != i)
          others.push_back(mean_logits[j]);
      b = weight_descriptions_from_logits(desc_logits, others, cfg.gamma_t).weights;
    }
    OtResult ot = awt_distance(views, a, desc, b, cfg.sinkhorn);
    out.per_class_ot_cost[i] = ot.cost;
    out.all_converged = out.all_converged && ot.plan.converged;
    if (cfg.keep_plans) {
      out.description_weights.push_back(b);
      out.plans.push_back(std::move(ot.plan));
    }
  }
  if (cfg.keep_plans)
    out.image_weights = a;
  out.probs = classify_ot(out.per_class_ot_cost, cfg.tau);
  return out;
}

ClassificationResult classify_ensemble(const EmbeddingMatrix &views, const TextContext &text,
                                       const AwtConfig &cfg) {
  ClassificationResult out;
  if (cfg.ensemble_space == EnsembleSpace::embedding) {
    out.probs = classify_cosine(mean_embedding(views), text.class_means(), cfg.tau);
    return out;
  }
  std::vector<double> avg(text.num_classes(), 0.0);
  for (std::size_t n = 0; n < views.rows(); ++n) {
    const auto p = classify_cosine(views.row(n), text.class_means(), cfg.tau);
    for (std::size_t j = 0; j < avg.size(); ++j)
      avg[j] += p.probs[j];
  }
  std::vector<double> logits(avg.size());
  for (std::size_t j = 0; j < avg.size(); ++j)
    logits[j] = std::log(avg[j] / static_cast<double>(views.rows()));
  out.probs = make_probabilities(std::move(logits));
  return out;
}

} // namespace

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
  case Mode::raw: return "raw";
  case Mode::ensemble: return "ensemble";
  case Mode::ot_uniform: return "ot-uniform";
  case Mode::awt: return "awt";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  if (text == "raw") return Mode::raw;
  if (text == "ensemble") return Mode::ensemble;
  if (text == "ot-uniform" || text == "ot_uniform") return Mode::ot_uniform;
  if (text == "awt") return Mode::awt;
  throw Error(Errc::InvalidArgument, "unknown mode '" + std::string(text) + "'");
}

void AwtConfig::validate() const {
  check_temperature(gamma_v, "gamma_v");
  check_temperature(gamma_t, "gamma_t");
  check_temperature(tau, "tau");
  sinkhorn.validate();
}

TextContext::TextContext(const std::vector<EmbeddingMatrix> &classes, const AwtConfig &cfg)
    : descriptions_(cut_classes(classes, cfg.m_descriptions)),
      means_(stack_class_means(descriptions_, cfg.renormalize_class_means)),
      names_(stack_first_rows(descriptions_)) {}

ClassificationResult classify_image(const EmbeddingMatrix &image_views, const TextContext &text,
                                    const AwtConfig &cfg) {
  if (text.num_classes() == 0)
    throw Error(Errc::EmptyClassSet, "no classes to classify against");
  if (image_views.dim() != text.dim())
    throw Error(Errc::DimensionMismatch,
                "image dim " + std::to_string(image_views.dim()) + " vs text dim " +
                    std::to_string(text.dim()));
  const EmbeddingMatrix views =
      image_views.head(std::min(image_views.rows(), cfg.n_image_views + 1));

  ClassificationResult out;
  switch (cfg.mode) {
  case Mode::raw:
    out.probs = classify_cosine(views.row(0), text.class_names(), cfg.tau);
    break;
  case Mode::ensemble:
    out = classify_ensemble(views, text, cfg);
    break;
  case Mode::ot_uniform:
  case Mode::awt:
    out = classify_ot_modes(views, text, cfg);
    break;
  }
  out.predicted_index = out.probs.argmax();
  return out;
}

ClassificationResult classify_image(const EmbeddingMatrix &image_views,
                                    const std::vector<EmbeddingMatrix> &classes,
                                    const AwtConfig &cfg) {
  return classify_image(image_views, TextContext(classes, cfg), cfg);
}

LoadedTask load_task(const io::TaskManifest &manifest) {
  const auto diagnostics = io::validate_manifest(manifest);
  if (!diagnostics.empty()) {
    std::string msg = std::to_string(diagnostics.size()) + " manifest problem(s):";
    for (const auto &d : diagnostics)
      msg += "\n  " + io::format_diagnostic(d);
    throw Error(Errc::ManifestError, msg);
  }
  LoadedTask task;
  task.manifest = manifest;
  const auto load = [](const std::string &where, const std::filesystem::path &p) {
    try {
      return io::read_array(p, io::Normalize::yes);
    } catch (const Error &e) {
      throw Error(Errc::ManifestError, where + ": " + e.detail());
    }
  };
  for (std::size_t i = 0; i < manifest.classes.size(); ++i)
    task.class_embeddings.push_back(load("classes[" + std::to_string(i) + "].embeddings_path",
                                         manifest.classes[i].embeddings_path));
  for (std::size_t i = 0; i < manifest.images.size(); ++i)
    task.image_views.push_back(
        load("images[" + std::to_string(i) + "].views_path", manifest.images[i].views_path));
  return task;
}

EvaluationReport evaluate(const LoadedTask &task, const AwtConfig &cfg, unsigned jobs) {
  cfg.validate();
  const std::size_t n = task.image_views.size();
  if (n == 0)
    throw Error(Errc::ManifestError, "manifest lists no images");
  const TextContext text(task.class_embeddings, cfg);

  std::vector<std::optional<ClassificationResult>> results(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = classify_image(task.image_views[i], text, cfg);
        results[i]->image_id = task.manifest.images[i].id;
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (jobs == 0)
    jobs = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(jobs, n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(worker);
  }
  for (const auto &f : failures)
    if (f)
      std::rethrow_exception(f);

  EvaluationReport report;
  report.config = cfg;
  report.n_images = n;
  report.dataset_name = task.manifest.dataset_name;
  report.class_names = task.manifest.class_names();
  const std::size_t c = text.num_classes();
  std::vector<std::size_t> hits(c, 0), totals(c, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ImageOutcome o{std::move(*results[i]), task.manifest.images[i].label_index};
    const bool hit = o.result.predicted_index == o.label_index;
    correct += hit;
    if (o.label_index < c) {
      ++totals[o.label_index];
      hits[o.label_index] += hit;
    }
    if (!o.result.all_converged)
      ++report.non_converged_solves;
    report.images.push_back(std::move(o));
  }
  report.top1_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  for (std::size_t j = 0; j < c; ++j)
    report.per_class_accuracy.push_back(
        totals[j] ? std::optional<double>(static_cast<double>(hits[j]) / totals[j])
                  : std::nullopt);
  return report;
}

EvaluationReport evaluate(const io::TaskManifest &manifest, const AwtConfig &cfg,
                          unsigned jobs) {
  return evaluate(load_task(manifest), cfg, jobs);
}

std::string_view to_string(SweepAxis axis) noexcept {
  switch (axis) {
  case SweepAxis::n_views: return "n";
  case SweepAxis::m_descriptions: return "m";
  case SweepAxis::gamma_v: return "gamma-v";
  case SweepAxis::gamma_t: return "gamma-t";
  case SweepAxis::epsilon: return "epsilon";
  }
  return "unknown";
}

SweepAxis parse_axis(std::string_view text) {
  if (text == "n" || text == "N") return SweepAxis::n_views;
  if (text == "m" || text == "M") return SweepAxis::m_descriptions;
  if (text == "gamma-v" || text == "gamma_v") return SweepAxis::gamma_v;
  if (text == "gamma-t" || text == "gamma_t") return SweepAxis::gamma_t;
  if (text == "epsilon") return SweepAxis::epsilon;
  throw Error(Errc::InvalidArgument, "unknown sweep axis '" + std::string(text) + "'");
}

AwtConfig with_axis_value(const AwtConfig &base, SweepAxis axis, double value) {
  AwtConfig cfg = base;
  const auto as_count = [&] {
    if (!(value >= 0.0) || value != std::floor(value) || value > 1e9)
      throw Error(Errc::InvalidArgument,
                  "axis " + std::string(to_string(axis)) + " needs non-negative integers");
    return static_cast<std::size_t>(value);
  };
  switch (axis) {
  case SweepAxis::n_views: cfg.n_image_views = as_count(); break;
  case SweepAxis::m_descriptions: cfg.m_descriptions = as_count(); break;
  case SweepAxis::gamma_v: cfg.gamma_v = value; break;
  case SweepAxis::gamma_t: cfg.gamma_t = value; break;
  case SweepAxis::epsilon: cfg.sinkhorn.epsilon = value; break;
  }
  cfg.validate();
  return cfg;
}

std::vector<EvaluationReport> ablation_sweep(const LoadedTask &task, const AwtConfig &base,
                                             SweepAxis axis, std::span<const double> values,
                                             unsigned jobs) {
  std::vector<AwtConfig> configs;
  for (double v : values)
    configs.push_back(with_axis_value(base, axis, v));

  if (axis == SweepAxis::n_views || axis == SweepAxis::m_descriptions) {
    std::size_t need = 0;
    for (const auto &c : configs)
      need = std::max(need, (axis == SweepAxis::n_views ? c.n_image_views : c.m_descriptions) + 1);
    const auto &files = axis == SweepAxis::n_views ? task.image_views : task.class_embeddings;
    for (std::size_t i = 0; i < files.size(); ++i)
      if (files[i].rows() < need)
        throw Error(Errc::InsufficientViews,
                    std::string(axis == SweepAxis::n_views ? "images[" : "classes[") +
                        std::to_string(i) + "] has " + std::to_string(files[i].rows()) +
                        " rows, sweep needs " + std::to_string(need));
  }

  std::vector<EvaluationReport> out;
  for (const auto &c : configs)
    out.push_back(evaluate(task, c, jobs));
  return out;
}

} // namespace awt
