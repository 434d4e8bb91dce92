#include "synthetic.hpp"

#include "awt/npy.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <string>
#include <unistd.h>

namespace awt::testing {

namespace {

EmbeddingMatrix to_matrix(const std::vector<std::vector<double>> &rows) {
  std::vector<float> data;
  for (const auto &r : rows)
    for (double v : r)
      data.push_back(static_cast<float>(v));
  return EmbeddingMatrix(rows.size(), rows.front().size(), std::move(data));
}

} // namespace

SyntheticTask write_synthetic_task(const SyntheticSpec &spec, const std::filesystem::path &dir) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.sigma);

  // Centroids on scaled basis vectors: |mu_i - mu_j| = separation * sigma.
  const double scale = spec.separation * spec.sigma / std::sqrt(2.0);
  SyntheticTask out;
  out.centroids.assign(spec.classes, std::vector<double>(spec.dim, 0.0));
  for (std::size_t c = 0; c < spec.classes; ++c)
    out.centroids[c][c % spec.dim] = scale;

  const auto sample = [&](std::size_t c, std::size_t count) {
    std::vector<std::vector<double>> rows(count, std::vector<double>(spec.dim));
    for (auto &r : rows)
      for (std::size_t k = 0; k < spec.dim; ++k)
        r[k] = out.centroids[c][k] + noise(rng);
    return rows;
  };

  std::filesystem::create_directories(dir / "classes");
  std::filesystem::create_directories(dir / "images");
  auto &m = out.manifest;
  m.dataset_name = "synthetic";
  m.dataset_description = "contains Gaussian blobs";
  m.dim = spec.dim;
  m.base_dir = dir;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    io::ClassEntry e;
    e.name = "class" + std::to_string(c);
    for (std::size_t k = 0; k < spec.descriptions; ++k)
      e.descriptions.push_back("description " + std::to_string(k) + " of " + e.name);
    e.embeddings_path = dir / "classes" / (std::to_string(c) + ".npy");
    io::write_array(to_matrix(sample(c, spec.descriptions + 1)), e.embeddings_path);
    m.classes.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < spec.images; ++i) {
    io::ImageEntry e;
    e.id = "img" + std::to_string(i);
    e.label_index = i % spec.classes;
    e.views_path = dir / "images" / (std::to_string(i) + ".npy");
    auto rows = sample(e.label_index, spec.views + 1);
    io::write_array(to_matrix(rows), e.views_path);
    out.image_rows.push_back(std::move(rows));
    m.images.push_back(std::move(e));
  }
  io::save_manifest(m, dir / "manifest.json");
  return out;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("awt-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

} // namespace awt::testing
