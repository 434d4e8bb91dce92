#pragma once

// NPY reader/writer for the subset the pipeline exchanges: little-endian
// float32 ('<f4'), C order, 1-D or 2-D. Headers are written exactly as
// NumPy writes them, so files round-trip byte for byte.

#include "awt/core_types.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace awt::io {

enum class Normalize { no, yes };

struct NpyHeader {
  int major_version = 1;
  int minor_version = 0;
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  std::size_t header_bytes = 0; // magic + length field + dict + padding
};

// Parses magic, version and header dict. Throws BadMagic, UnsupportedDtype,
// UnsupportedOrder, UnsupportedShape.
NpyHeader parse_npy_header(const std::string &bytes);

// Reads only the header of a file (for validation without loading payload).
NpyHeader read_array_header(const std::filesystem::path &path);

// A 1-D array of length n reads as a 1 x n matrix.
// Throws TruncatedPayload when the file is shorter than the header promises.
EmbeddingMatrix read_array(const std::filesystem::path &path,
                           Normalize normalize = Normalize::yes);
EmbeddingMatrix decode_array(const std::string &bytes, Normalize normalize = Normalize::yes);

// Serializes to NPY v1.0. `as_vector` writes shape (n,) for a one-row matrix.
std::string encode_array(const EmbeddingMatrix &m, bool as_vector = false);
void write_array(const EmbeddingMatrix &m, const std::filesystem::path &path,
                 bool as_vector = false);

std::string render_header_dict(const std::vector<std::size_t> &shape);

// Magic, version 1.0, length field and padded dict: everything before the
// payload.
std::string encode_header(const std::vector<std::size_t> &shape);

} // namespace awt::io
