#pragma once

// Synthetic classification tasks with known ground truth: each class is a
// Gaussian blob around its own centroid, images and class texts are both
// drawn from their class's blob.

#include "awt/manifest.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace awt::testing {

struct SyntheticSpec {
  std::size_t classes = 3;
  std::size_t images = 30;
  std::size_t views = 5;        // augmented views; files hold views + 1 rows
  std::size_t descriptions = 5; // files hold descriptions + 1 rows
  std::size_t dim = 32;
  double sigma = 0.1;      // per-coordinate noise
  double separation = 10;  // pairwise centroid distance, in units of sigma
  std::uint64_t seed = 42;
};

struct SyntheticTask {
  io::TaskManifest manifest;
  std::vector<std::vector<double>> centroids;
  // Unnormalized rows as written, [image][view][coord].
  std::vector<std::vector<std::vector<double>>> image_rows;
};

// Writes classes/*.npy, images/*.npy and manifest.json under `dir`.
SyntheticTask write_synthetic_task(const SyntheticSpec &spec, const std::filesystem::path &dir);

// Scratch directory removed on destruction.
class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
};

} // namespace awt::testing
