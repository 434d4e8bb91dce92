#include "cli.hpp"

#include "awt/error.hpp"
#include "awt/manifest.hpp"
#include "awt/npy.hpp"
#include "awt/pipeline.hpp"
#include "awt/prompting.hpp"
#include "awt/transport.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

namespace awt::cli {

namespace {

using nlohmann::json;

// Flag errors found after parsing (bad temperatures, empty lists, ...).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(Errc code) {
  switch (code) {
  case Errc::InvalidTemperature:
    return kUsage;
  case Errc::NumericalOverflow:
  case Errc::UnparseableReply:
  case Errc::MissingPlaceholder:
  case Errc::ClientError:
  case Errc::QuotaExhausted:
    return kRuntimeError;
  default:
    return kDataError;
  }
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

void write_json(const json &doc, const std::string &path, std::ostream &out) {
  const std::string text = doc.dump(2) + "\n";
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error(Errc::IoError, "cannot write " + path);
  f << text;
  if (!f)
    throw Error(Errc::IoError, "failed writing " + path);
}

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json plan_to_json(const TransportPlan &p) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.rows; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < p.cols; ++j)
      row.push_back(p(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Options shared by every subcommand that runs the pipeline.
struct PipelineFlags {
  std::string mode = "awt";
  std::string ensemble_space = "embedding";
  AwtConfig cfg;
  bool no_image_weights = false;
  bool no_desc_weights = false;
  bool raw_class_means = false;

  void add_to(CLI::App &app) {
    app.add_option("--mode", mode, "raw | ensemble | ot-uniform | awt")
        ->check(CLI::IsMember({"raw", "ensemble", "ot-uniform", "ot_uniform", "awt"}))
        ->capture_default_str();
    app.add_option("--gamma-v", cfg.gamma_v, "Image-view weighting temperature")
        ->capture_default_str();
    app.add_option("--gamma-t", cfg.gamma_t, "Description weighting temperature")
        ->capture_default_str();
    app.add_option("--tau", cfg.tau, "Softmax temperature of the classifiers")
        ->capture_default_str();
    app.add_option("--epsilon", cfg.sinkhorn.epsilon, "Sinkhorn regularization")
        ->capture_default_str();
    app.add_option("--max-iter", cfg.sinkhorn.max_iterations, "Sinkhorn iteration cap")
        ->capture_default_str();
    app.add_option("--tolerance", cfg.sinkhorn.tolerance, "Sinkhorn marginal tolerance")
        ->capture_default_str();
    app.add_option("--n-views", cfg.n_image_views, "Augmented views used per image (N)")
        ->capture_default_str();
    app.add_option("--m-desc", cfg.m_descriptions, "Descriptions used per class (M)")
        ->capture_default_str();
    app.add_option("--ensemble-space", ensemble_space, "ensemble mode: embedding | probability")
        ->check(CLI::IsMember({"embedding", "probability"}))
        ->capture_default_str();
    app.add_flag("--uniform-image-weights", no_image_weights,
                 "awt mode: uniform masses on image views");
    app.add_flag("--uniform-desc-weights", no_desc_weights,
                 "awt mode: uniform masses on descriptions");
    app.add_flag("--raw-class-means", raw_class_means,
                 "Do not re-normalize averaged class embeddings");
  }

  AwtConfig resolve() const {
    AwtConfig c = cfg;
    c.mode = parse_mode(mode);
    c.ensemble_space =
        ensemble_space == "probability" ? EnsembleSpace::probability : EnsembleSpace::embedding;
    c.weight_image_views = !no_image_weights;
    c.weight_descriptions = !no_desc_weights;
    c.renormalize_class_means = !raw_class_means;
    try {
      c.validate();
    } catch (const Error &e) {
      throw UsageError(e.detail());
    }
    return c;
  }
};

std::vector<double> parse_csv(const std::string &text) {
  std::vector<double> values;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
        ++used;
      if (used != item.size())
        throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw UsageError("--values: '" + item + "' is not a number");
    }
  }
  if (values.empty())
    throw UsageError("--values is empty");
  return values;
}

std::vector<std::string> read_class_list(const std::string &path) {
  const std::string text = read_text(path);
  std::vector<std::string> names;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json doc;
    try {
      doc = json::parse(text);
      names = doc.get<std::vector<std::string>>();
    } catch (const json::exception &e) {
      throw Error(Errc::SchemaError, path + ": expected a JSON array of strings: " + e.what());
    }
  } else {
    std::stringstream s(text);
    std::string line;
    while (std::getline(s, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#')
        continue;
      const auto e = line.find_last_not_of(" \t\r");
      names.push_back(line.substr(b, e - b + 1));
    }
  }
  if (names.empty())
    throw Error(Errc::SchemaError, path + ": no class names");
  return names;
}

// Reads a (1, n) or (n,) float32 array as an unnormalized measure.
DiscreteMeasure read_measure(const std::string &path) {
  const auto m = io::read_array(path, io::Normalize::no);
  if (m.rows() != 1)
    throw Error(Errc::UnsupportedShape, path + ": marginal must be a vector");
  std::vector<double> w(m.data().begin(), m.data().end());
  return DiscreteMeasure::normalized(std::move(w));
}

CostMatrix read_cost(const std::string &path) {
  const auto m = io::read_array(path, io::Normalize::no);
  return CostMatrix(m.rows(), m.dim(), std::vector<double>(m.data().begin(), m.data().end()));
}

std::size_t find_image(const io::TaskManifest &m, const std::string &id) {
  for (std::size_t i = 0; i < m.images.size(); ++i)
    if (m.images[i].id == id)
      return i;
  throw Error(Errc::UnknownId, "no image with id '" + id + "'");
}

std::size_t find_class(const io::TaskManifest &m, const std::string &name) {
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    if (m.classes[i].name == name)
      return i;
  throw Error(Errc::UnknownId, "no class named '" + name + "'");
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Entropy-weighted optimal-transport zero-shot classification over cached "
               "embeddings."};
  app.name("awt");
  app.set_config("--config", "", "TOML/INI file supplying option values (flags override it)");
  app.require_subcommand(1);

  std::function<int()> action;

  // evaluate
  auto *evaluate_cmd = app.add_subcommand("evaluate", "Classify every image of a manifest");
  std::string manifest_path, out_path;
  unsigned jobs = 1;
  bool strict = false;
  PipelineFlags eval_flags;
  evaluate_cmd->add_option("--manifest", manifest_path, "Task manifest JSON")->required();
  eval_flags.add_to(*evaluate_cmd);
  evaluate_cmd->add_option("--out", out_path, "Write the results JSON here");
  evaluate_cmd->add_option("--jobs", jobs, "Worker threads (0 = all cores)")
      ->capture_default_str();
  evaluate_cmd->add_flag("--strict", strict, "Exit 3 when any Sinkhorn solve did not converge");
  evaluate_cmd->callback([&] {
    action = [&] {
      const AwtConfig cfg = eval_flags.resolve();
      const auto report = evaluate(io::load_manifest(manifest_path), cfg, jobs);
      if (!out_path.empty())
        write_json(report_to_json(report), out_path, out);
      out << "top1=" << percent(report.top1_accuracy) << " images=" << report.n_images
          << " mode=" << to_string(cfg.mode)
          << " non_converged=" << report.non_converged_solves << "\n";
      if (strict && report.non_converged_solves > 0) {
        err << "error: " << report.non_converged_solves
            << " image(s) had a Sinkhorn solve that did not converge\n";
        return static_cast<int>(kRuntimeError);
      }
      return static_cast<int>(kOk);
    };
  });

  // validate
  auto *validate_cmd = app.add_subcommand("validate", "Check a manifest and its array files");
  std::string validate_path;
  validate_cmd->add_option("--manifest", validate_path, "Task manifest JSON")->required();
  validate_cmd->callback([&] {
    action = [&] {
      const auto diagnostics = io::validate_manifest(io::load_manifest(validate_path));
      for (const auto &d : diagnostics)
        err << io::format_diagnostic(d) << "\n";
      out << diagnostics.size() << " problem(s)\n";
      return static_cast<int>(diagnostics.empty() ? kOk : kDataError);
    };
  });

  // plan
  auto *plan_cmd = app.add_subcommand("plan", "Dump the transport plan of one image-class pair");
  std::string plan_manifest, plan_image, plan_class, plan_out;
  PipelineFlags plan_flags;
  plan_cmd->add_option("--manifest", plan_manifest, "Task manifest JSON")->required();
  plan_cmd->add_option("--image", plan_image, "Image id")->required();
  plan_cmd->add_option("--class", plan_class, "Class name")->required();
  plan_cmd->add_option("--out", plan_out, "Write the plan JSON here (default: stdout)");
  plan_flags.add_to(*plan_cmd);
  plan_cmd->callback([&] {
    action = [&] {
      AwtConfig cfg = plan_flags.resolve();
      if (cfg.mode != Mode::awt && cfg.mode != Mode::ot_uniform)
        throw UsageError("plan needs --mode awt or ot-uniform");
      cfg.keep_plans = true;
      const auto manifest = io::load_manifest(plan_manifest);
      const std::size_t img = find_image(manifest, plan_image);
      const std::size_t cls = find_class(manifest, plan_class);
      const LoadedTask task = load_task(manifest);
      const auto result = classify_image(task.image_views[img], task.class_embeddings, cfg);
      const auto &plan = result.plans.at(cls);
      const auto &a = *result.image_weights;
      const auto &b = result.description_weights.at(cls);
      const json doc = {
          {"image", plan_image},
          {"class", plan_class},
          {"cost", result.per_class_ot_cost[cls]},
          {"row_weights", std::vector<double>(a.weights().begin(), a.weights().end())},
          {"col_weights", std::vector<double>(b.weights().begin(), b.weights().end())},
          {"plan", plan_to_json(plan)},
          {"converged", plan.converged},
          {"iterations", plan.iterations},
          {"marginal_violation", plan.marginal_violation},
          {"config", config_to_json(cfg)}};
      write_json(doc, plan_out, out);
      return static_cast<int>(kOk);
    };
  });

  // sinkhorn / exact
  struct SolverFlags {
    std::string cost, a, b, out;
    SinkhornConfig sinkhorn;
    bool strict = false;
  };
  SolverFlags sk_flags, ex_flags;
  const auto add_solver_inputs = [](CLI::App &cmd, SolverFlags &f) {
    cmd.add_option("--cost", f.cost, "Cost matrix NPY (float32, entries in [0, 2])")->required();
    cmd.add_option("--a", f.a, "Source weights NPY (vector; renormalized)")->required();
    cmd.add_option("--b", f.b, "Target weights NPY (vector; renormalized)")->required();
    cmd.add_option("--out", f.out, "Write the result JSON here (default: stdout)");
  };
  const auto solve = [&](SolverFlags &f, bool exact) {
    if (!exact) {
      try {
        f.sinkhorn.validate();
      } catch (const Error &e) {
        throw UsageError(e.detail());
      }
    }
    const CostMatrix c = read_cost(f.cost);
    const DiscreteMeasure a = read_measure(f.a);
    const DiscreteMeasure b = read_measure(f.b);
    const OtResult r = exact ? exact_ot(c, a, b) : sinkhorn(c, a, b, f.sinkhorn);
    json doc = {{"solver", exact ? "exact" : "sinkhorn"},
                {"cost", r.cost},
                {"plan", plan_to_json(r.plan)},
                {"converged", r.plan.converged},
                {"iterations", r.plan.iterations},
                {"marginal_violation", r.plan.marginal_violation}};
    if (!exact)
      doc["epsilon"] = f.sinkhorn.epsilon;
    write_json(doc, f.out, out);
    if (f.strict && !r.plan.converged) {
      err << "error: Sinkhorn did not converge in " << r.plan.iterations << " iterations\n";
      return static_cast<int>(kRuntimeError);
    }
    return static_cast<int>(kOk);
  };

  auto *sinkhorn_cmd = app.add_subcommand("sinkhorn", "Entropic OT between two weighted sets");
  add_solver_inputs(*sinkhorn_cmd, sk_flags);
  sinkhorn_cmd->add_option("--epsilon", sk_flags.sinkhorn.epsilon, "Regularization")
      ->capture_default_str();
  sinkhorn_cmd->add_option("--max-iter", sk_flags.sinkhorn.max_iterations, "Iteration cap")
      ->capture_default_str();
  sinkhorn_cmd->add_option("--tolerance", sk_flags.sinkhorn.tolerance, "Marginal tolerance")
      ->capture_default_str();
  sinkhorn_cmd->add_flag("--strict", sk_flags.strict, "Exit 3 when not converged");
  sinkhorn_cmd->callback([&] { action = [&] { return solve(sk_flags, false); }; });

  auto *exact_cmd = app.add_subcommand("exact", "Exact OT by the transportation simplex");
  add_solver_inputs(*exact_cmd, ex_flags);
  exact_cmd->callback([&] { action = [&] { return solve(ex_flags, true); }; });

  // gen-descriptions
  auto *gen_cmd = app.add_subcommand(
      "gen-descriptions", "Two-step dataset-aware prompting for class descriptions");
  std::string dataset_desc, dataset_desc_file, classes_path, gen_out, fixtures, record;
  prompt::GenerationConfig gen_cfg;
  prompt::HttpChatClient::Options http;
  std::string dataset_name = "dataset";
  std::size_t m_desc = 50;
  auto *desc_opt = gen_cmd->add_option("--dataset-desc", dataset_desc, "Dataset description");
  gen_cmd->add_option("--dataset-desc-file", dataset_desc_file, "File holding the description")
      ->excludes(desc_opt);
  gen_cmd->add_option("--dataset-name", dataset_name, "Dataset name")->capture_default_str();
  gen_cmd->add_option("--classes", classes_path, "Class names: one per line or a JSON array")
      ->required();
  gen_cmd->add_option("--questions", gen_cfg.question_count, "Questions to generate")
      ->capture_default_str();
  gen_cmd->add_option("--m", m_desc, "Descriptions per class")->capture_default_str();
  gen_cmd->add_option("--endpoint", http.endpoint, "Chat-completion URL")->capture_default_str();
  gen_cmd->add_option("--model", gen_cfg.model, "Model name")->capture_default_str();
  gen_cmd->add_option("--temperature", gen_cfg.temperature, "Sampling temperature")
      ->capture_default_str();
  gen_cmd->add_option("--max-requeries", gen_cfg.max_requeries, "Re-queries on short replies")
      ->capture_default_str();
  gen_cmd->add_option("--rps", http.requests_per_second, "Request-rate ceiling (0 = none)")
      ->capture_default_str();
  gen_cmd->add_option("--jobs", gen_cfg.jobs, "Classes generated concurrently")
      ->capture_default_str();
  auto *fixtures_opt =
      gen_cmd->add_option("--fixtures", fixtures, "Replay recorded replies from this directory");
  gen_cmd->add_option("--record", record, "Record live replies into this directory")
      ->excludes(fixtures_opt);
  gen_cmd->add_option("--out", gen_out, "Write the descriptions JSON here (default: stdout)");
  gen_cmd->callback([&] {
    action = [&] {
      if (m_desc == 0 || gen_cfg.question_count == 0)
        throw UsageError("--m and --questions must be at least 1");
      std::unique_ptr<prompt::ChatClient> client;
      if (!fixtures.empty()) {
        client = std::make_unique<prompt::FixtureClient>(fixtures);
      } else {
        const char *key = std::getenv(prompt::kApiKeyEnv);
        if (key == nullptr || *key == '\0')
          throw UsageError(std::string("no API key: set ") + prompt::kApiKeyEnv +
                           " or replay recorded replies with --fixtures DIR");
        http.api_key = key;
        if (!record.empty())
          http.record_dir = record;
        client = std::make_unique<prompt::HttpChatClient>(http);
      }
      prompt::DatasetSpec spec;
      spec.name = dataset_name;
      spec.description = dataset_desc_file.empty() ? dataset_desc : read_text(dataset_desc_file);
      spec.class_names = read_class_list(classes_path);
      const auto questions = prompt::generate_questions(spec, *client, gen_cfg);
      const auto sets = prompt::generate_all(spec, questions, m_desc, *client, gen_cfg);
      write_json(prompt::descriptions_to_json(spec, questions, sets, gen_cfg), gen_out, out);
      if (!gen_out.empty())
        out << sets.size() << " classes x " << m_desc << " descriptions from "
            << questions.size() << " questions\n";
      return static_cast<int>(kOk);
    };
  });

  // sweep
  auto *sweep_cmd = app.add_subcommand("sweep", "Evaluate over one ablation axis");
  std::string sweep_manifest, sweep_axis, sweep_values, sweep_out;
  unsigned sweep_jobs = 1;
  PipelineFlags sweep_flags;
  sweep_cmd->add_option("--manifest", sweep_manifest, "Task manifest JSON")->required();
  sweep_cmd->add_option("--axis", sweep_axis, "n | m | gamma-v | gamma-t | epsilon")
      ->required()
      ->check(CLI::IsMember({"n", "m", "gamma-v", "gamma-t", "epsilon"}));
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated axis values")->required();
  sweep_cmd->add_option("--out", sweep_out, "Write the reports JSON here");
  sweep_cmd->add_option("--jobs", sweep_jobs, "Worker threads (0 = all cores)")
      ->capture_default_str();
  sweep_flags.add_to(*sweep_cmd);
  sweep_cmd->callback([&] {
    action = [&] {
      const AwtConfig base = sweep_flags.resolve();
      const SweepAxis axis = parse_axis(sweep_axis);
      const auto values = parse_csv(sweep_values);
      try {
        for (double v : values)
          with_axis_value(base, axis, v);
      } catch (const Error &e) {
        throw UsageError(e.detail());
      }
      const auto task = load_task(io::load_manifest(sweep_manifest));
      const auto reports = ablation_sweep(task, base, axis, values, sweep_jobs);
      json doc = {{"axis", std::string(to_string(axis))}, {"values", values}};
      json list = json::array();
      for (const auto &r : reports)
        list.push_back(report_to_json(r, false));
      doc["reports"] = std::move(list);
      if (!sweep_out.empty())
        write_json(doc, sweep_out, out);
      for (std::size_t i = 0; i < reports.size(); ++i)
        out << to_string(axis) << "=" << values[i]
            << " top1=" << percent(reports[i].top1_accuracy) << "\n";
      return static_cast<int>(kOk);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kUsage);
  }

  try {
    return action();
  } catch (const UsageError &e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

} // namespace awt::cli
