#include "awt/manifest.hpp"

#include "awt/error.hpp"
#include "awt/npy.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace awt::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string &field, const std::string &why) {
  throw Error(Errc::SchemaError, field + ": " + why);
}

const json &require(const json &obj, const char *key, const std::string &where) {
  if (!obj.is_object())
    schema_error(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end())
    schema_error(where + "." + key, "missing");
  return *it;
}

std::string require_string(const json &obj, const char *key, const std::string &where) {
  const json &v = require(obj, key, where);
  if (!v.is_string())
    schema_error(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::size_t require_index(const json &obj, const char *key, const std::string &where) {
  const json &v = require(obj, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    schema_error(where + "." + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

fs::path resolve(const fs::path &base, const std::string &p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relative_to(const fs::path &p, const fs::path &base) {
  if (base.empty())
    return p.generic_string();
  const fs::path rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..")
    return p.generic_string();
  return rel.generic_string();
}

} // namespace

std::vector<std::string> TaskManifest::class_names() const {
  std::vector<std::string> out;
  out.reserve(classes.size());
  for (const auto &c : classes)
    out.push_back(c.name);
  return out;
}

TaskManifest parse_manifest(const json &doc, const fs::path &base_dir) {
  TaskManifest m;
  m.base_dir = base_dir;
  if (!doc.is_object())
    schema_error("$", "manifest must be a JSON object");

  const json &ds = require(doc, "dataset", "$");
  m.dataset_name = require_string(ds, "name", "dataset");
  if (const auto it = ds.find("description"); it != ds.end()) {
    if (!it->is_string())
      schema_error("dataset.description", "expected a string");
    m.dataset_description = it->get<std::string>();
  }
  m.dim = require_index(doc, "dim", "$");

  const json &classes = require(doc, "classes", "$");
  if (!classes.is_array())
    schema_error("classes", "expected an array");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string where = "classes[" + std::to_string(i) + "]";
    ClassEntry c;
    c.name = require_string(classes[i], "name", where);
    if (const auto it = classes[i].find("descriptions"); it != classes[i].end()) {
      if (!it->is_array())
        schema_error(where + ".descriptions", "expected an array of strings");
      for (const auto &d : *it) {
        if (!d.is_string())
          schema_error(where + ".descriptions", "expected an array of strings");
        c.descriptions.push_back(d.get<std::string>());
      }
    }
    c.embeddings_path = resolve(base_dir, require_string(classes[i], "embeddings_path", where));
    m.classes.push_back(std::move(c));
  }

  const json &images = require(doc, "images", "$");
  if (!images.is_array())
    schema_error("images", "expected an array");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    ImageEntry e;
    const json &id = require(images[i], "id", where);
    if (id.is_string())
      e.id = id.get<std::string>();
    else if (id.is_number_integer())
      e.id = std::to_string(id.get<long long>());
    else
      schema_error(where + ".id", "expected a string");
    e.label_index = require_index(images[i], "label_index", where);
    e.views_path = resolve(base_dir, require_string(images[i], "views_path", where));
    m.images.push_back(std::move(e));
  }
  return m;
}

TaskManifest load_manifest(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::IoError, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error(Errc::SchemaError, path.string() + ": invalid JSON: " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

json manifest_to_json(const TaskManifest &m) {
  json doc;
  doc["dataset"] = {{"name", m.dataset_name}, {"description", m.dataset_description}};
  doc["dim"] = m.dim;
  doc["classes"] = json::array();
  for (const auto &c : m.classes)
    doc["classes"].push_back({{"name", c.name},
                              {"descriptions", c.descriptions},
                              {"embeddings_path", relative_to(c.embeddings_path, m.base_dir)}});
  doc["images"] = json::array();
  for (const auto &e : m.images)
    doc["images"].push_back({{"id", e.id},
                             {"label_index", e.label_index},
                             {"views_path", relative_to(e.views_path, m.base_dir)}});
  return doc;
}

void save_manifest(const TaskManifest &m, const fs::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw Error(Errc::IoError, "cannot write manifest " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

std::vector<Diagnostic> validate_manifest(const TaskManifest &m) {
  std::vector<Diagnostic> out;
  const auto report = [&](std::string where, std::string what) {
    out.push_back({std::move(where), std::move(what)});
  };

  if (m.dataset_name.empty())
    report("dataset.name", "empty dataset name");
  if (m.dim == 0)
    report("dim", "dim must be positive");
  if (m.classes.empty())
    report("classes", "no classes");
  if (m.images.empty())
    report("images", "no images");

  // Reads the header and checks it against the manifest; returns row count.
  const auto check_file = [&](const std::string &where, const fs::path &p) -> std::size_t {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
      report(where, "file not found: " + p.string());
      return 0;
    }
    try {
      const NpyHeader h = read_array_header(p);
      const std::size_t rows = h.shape.size() == 2 ? h.shape[0] : 1;
      const std::size_t dim = h.shape.back();
      if (dim != m.dim)
        report(where, "dim mismatch in " + p.string() + ": file has " + std::to_string(dim) +
                          ", manifest declares " + std::to_string(m.dim));
      const auto size = fs::file_size(p, ec);
      if (!ec && size < h.header_bytes + rows * dim * sizeof(float))
        report(where, "truncated payload in " + p.string());
      if (rows == 0)
        report(where, "no rows in " + p.string());
      return rows;
    } catch (const Error &e) {
      report(where, std::string(e.what()) + " in " + p.string());
      return 0;
    }
  };

  std::set<std::string> class_names;
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    const auto &c = m.classes[i];
    const std::string where = "classes[" + std::to_string(i) + "]";
    if (c.name.empty())
      report(where + ".name", "empty class name");
    else if (!class_names.insert(c.name).second)
      report(where + ".name", "duplicate class name '" + c.name + "'");
    for (std::size_t k = 0; k < c.descriptions.size(); ++k)
      if (c.descriptions[k].empty())
        report(where + ".descriptions[" + std::to_string(k) + "]", "empty description");
    const std::size_t rows = check_file(where + ".embeddings_path", c.embeddings_path);
    if (rows != 0 && !c.descriptions.empty() && rows != c.descriptions.size() + 1)
      report(where + ".embeddings_path",
             "expected " + std::to_string(c.descriptions.size() + 1) +
                 " rows (class name + descriptions) in " + c.embeddings_path.string() +
                 ", found " + std::to_string(rows));
  }

  std::set<std::string> ids;
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    const auto &e = m.images[i];
    const std::string where = "images[" + std::to_string(i) + "]";
    if (e.id.empty())
      report(where + ".id", "empty image id");
    else if (!ids.insert(e.id).second)
      report(where + ".id", "duplicate image id '" + e.id + "'");
    if (e.label_index >= m.classes.size())
      report(where + ".label_index", "label out of range: " + std::to_string(e.label_index) +
                                         " >= " + std::to_string(m.classes.size()) + " classes");
    check_file(where + ".views_path", e.views_path);
  }
  return out;
}

std::string format_diagnostic(const Diagnostic &d) { return d.location + ": " + d.message; }

} // namespace awt::io
