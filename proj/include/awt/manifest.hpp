#pragma once

// Task manifest: a JSON index tying class names, descriptions and embedding
// files into an evaluable classification task. Relative paths resolve
// against the manifest's directory; unknown fields are ignored.
//
//   {
//     "dataset": {"name": "...", "description": "..."},
//     "dim": 512,
//     "classes": [{"name": "...", "descriptions": ["..."],
//                  "embeddings_path": "classes/0.npy"}],
//     "images":  [{"id": "...", "label_index": 0,
//                  "views_path": "images/0.npy"}]
//   }

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace awt::io {

struct ClassEntry {
  std::string name;
  std::vector<std::string> descriptions;
  std::filesystem::path embeddings_path; // resolved
};

struct ImageEntry {
  std::string id;
  std::size_t label_index = 0;
  std::filesystem::path views_path; // resolved
};

struct TaskManifest {
  std::string dataset_name;
  std::string dataset_description;
  std::size_t dim = 0;
  std::vector<ClassEntry> classes;
  std::vector<ImageEntry> images;
  std::filesystem::path base_dir;

  std::vector<std::string> class_names() const;
};

struct Diagnostic {
  std::string location; // e.g. "images[3].label_index"
  std::string message;
};

// Throws SchemaError naming the offending field, IoError when unreadable.
TaskManifest load_manifest(const std::filesystem::path &path);
TaskManifest parse_manifest(const nlohmann::json &doc, const std::filesystem::path &base_dir);

// Writes paths relative to `base_dir` when they live underneath it.
nlohmann::json manifest_to_json(const TaskManifest &m);
void save_manifest(const TaskManifest &m, const std::filesystem::path &path);

// Shapes, dims, label ranges and file existence. Reads array headers only;
// has no side effects.
std::vector<Diagnostic> validate_manifest(const TaskManifest &m);

std::string format_diagnostic(const Diagnostic &d);

} // namespace awt::io
