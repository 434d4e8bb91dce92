#include "awt/npy.hpp"

#include "awt/error.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <variant>

namespace awt::io {

namespace {

constexpr std::array<char, 6> kMagic{'\x93', 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kAlign = 64;
// NumPy reserves room so the leading axis can grow in place.
constexpr std::size_t kGrowthAxisMaxDigits = 21;

using DictValue = std::variant<std::string, bool, std::vector<std::size_t>>;

// Parser for the Python dict literal stored in the header.
class DictParser {
public:
  explicit DictParser(std::string_view text) : s_(text) {}

  std::map<std::string, DictValue> parse() {
    std::map<std::string, DictValue> out;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      std::string key = parse_string();
      expect(':');
      out[key] = parse_value();
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      break;
    }
    return out;
  }

private:
  [[noreturn]] void fail(const std::string &why) const {
    throw Error(Errc::BadMagic, "malformed NPY header (" + why + "): " + std::string(s_));
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c)
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string parse_string() {
    skip_ws();
    const char quote = peek();
    if (quote != '\'' && quote != '"')
      fail("expected string");
    const auto end = s_.find(quote, pos_ + 1);
    if (end == std::string_view::npos)
      fail("unterminated string");
    std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }
  DictValue parse_value() {
    skip_ws();
    const char c = peek();
    if (c == '\'' || c == '"')
      return parse_string();
    if (s_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    if (c == '(')
      return parse_tuple();
    fail("unexpected value");
  }
  std::vector<std::size_t> parse_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      std::size_t v = 0;
      bool any = false;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(peek() - '0');
        ++pos_;
        any = true;
      }
      if (s_.substr(pos_, 1) == "L") // Python 2 long suffix
        ++pos_;
      if (!any)
        fail("expected integer in shape");
      dims.push_back(v);
      skip_ws();
      if (peek() == ',')
        ++pos_;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path &path, std::optional<std::size_t> limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::IoError, "cannot open " + path.string());
  if (!limit)
    return std::string(std::istreambuf_iterator<char>(in), {});
  std::string out(*limit, '\0');
  in.read(out.data(), static_cast<std::streamsize>(*limit));
  out.resize(static_cast<std::size_t>(in.gcount()));
  return out;
}

std::uint32_t read_le(const std::string &bytes, std::size_t offset, std::size_t width) {
  std::uint32_t v = 0;
  for (std::size_t k = 0; k < width; ++k)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + k])) << (8 * k);
  return v;
}

std::size_t element_count(const std::vector<std::size_t> &shape) {
  std::size_t n = 1;
  for (std::size_t d : shape)
    n *= d;
  return n;
}

} // namespace

std::string render_header_dict(const std::vector<std::size_t> &shape) {
  std::string dims;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k)
      dims += ", ";
    dims += std::to_string(shape[k]);
  }
  if (shape.size() == 1)
    dims += ",";
  return "{'descr': '<f4', 'fortran_order': False, 'shape': (" + dims + "), }";
}

NpyHeader parse_npy_header(const std::string &bytes) {
  if (bytes.size() < 10 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw Error(Errc::BadMagic, "missing \\x93NUMPY magic");
  NpyHeader h;
  h.major_version = static_cast<unsigned char>(bytes[6]);
  h.minor_version = static_cast<unsigned char>(bytes[7]);
  std::size_t prefix = 0;
  std::size_t dict_len = 0;
  if (h.major_version == 1) {
    prefix = 10;
    dict_len = read_le(bytes, 8, 2);
  } else if (h.major_version == 2 || h.major_version == 3) {
    if (bytes.size() < 12)
      throw Error(Errc::TruncatedPayload, "header length field cut short");
    prefix = 12;
    dict_len = read_le(bytes, 8, 4);
  } else {
    throw Error(Errc::BadMagic, "unsupported NPY version " + std::to_string(h.major_version));
  }
  if (bytes.size() < prefix + dict_len)
    throw Error(Errc::TruncatedPayload, "header is longer than the file");
  h.header_bytes = prefix + dict_len;

  const auto dict = DictParser(std::string_view(bytes).substr(prefix, dict_len)).parse();
  const auto get = [&](const char *key) -> const DictValue & {
    const auto it = dict.find(key);
    if (it == dict.end())
      throw Error(Errc::BadMagic, std::string("NPY header lacks '") + key + "'");
    return it->second;
  };
  const auto *descr = std::get_if<std::string>(&get("descr"));
  const auto *fortran = std::get_if<bool>(&get("fortran_order"));
  const auto *shape = std::get_if<std::vector<std::size_t>>(&get("shape"));
  if (!descr || !fortran || !shape)
    throw Error(Errc::BadMagic, "NPY header fields have unexpected types");
  h.descr = *descr;
  h.fortran_order = *fortran;
  h.shape = *shape;

  if (h.descr != "<f4")
    throw Error(Errc::UnsupportedDtype, "dtype '" + h.descr + "' (only '<f4' is supported)");
  if (h.fortran_order)
    throw Error(Errc::UnsupportedOrder, "fortran_order arrays are not supported");
  if (h.shape.empty() || h.shape.size() > 2)
    throw Error(Errc::UnsupportedShape,
                "expected a 1-D or 2-D array, got " + std::to_string(h.shape.size()) + "-D");
  return h;
}

NpyHeader read_array_header(const std::filesystem::path &path) {
  // v1 headers are at most 10 + 65535 bytes; read the prefix first.
  std::string head = read_file(path, 12);
  if (head.size() >= 10 && std::equal(kMagic.begin(), kMagic.end(), head.begin())) {
    const std::size_t want = head[6] == 1 ? 10 + read_le(head, 8, 2)
                                          : (head.size() >= 12 ? 12 + read_le(head, 8, 4) : 12);
    head = read_file(path, want);
  }
  return parse_npy_header(head);
}

EmbeddingMatrix decode_array(const std::string &bytes, Normalize normalize) {
  const NpyHeader h = parse_npy_header(bytes);
  const std::size_t rows = h.shape.size() == 2 ? h.shape[0] : 1;
  const std::size_t dim = h.shape.back();
  const std::size_t count = element_count(h.shape);
  const std::size_t need = count * sizeof(float);
  if (bytes.size() - h.header_bytes < need)
    throw Error(Errc::TruncatedPayload,
                "payload has " + std::to_string(bytes.size() - h.header_bytes) +
                    " bytes, shape needs " + std::to_string(need));
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + h.header_bytes, need);
  if constexpr (std::endian::native == std::endian::big) {
    for (float &f : data) {
      auto u = std::bit_cast<std::uint32_t>(f);
      u = ((u & 0xFFu) << 24) | ((u & 0xFF00u) << 8) | ((u >> 8) & 0xFF00u) | (u >> 24);
      f = std::bit_cast<float>(u);
    }
  }
  EmbeddingMatrix m(rows, dim, std::move(data));
  return normalize == Normalize::yes ? normalize_rows(m) : m;
}

EmbeddingMatrix read_array(const std::filesystem::path &path, Normalize normalize) {
  try {
    return decode_array(read_file(path, std::nullopt), normalize);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string encode_header(const std::vector<std::size_t> &shape) {
  if (shape.empty())
    throw Error(Errc::UnsupportedShape, "scalar arrays are not supported");
  std::string dict = render_header_dict(shape);
  dict.append(kGrowthAxisMaxDigits - std::to_string(shape.front()).size(), ' ');
  // magic(6) + version(2) + length(2) + dict + '\n', padded to kAlign
  const std::size_t used = 10 + dict.size() + 1;
  const std::size_t pad = kAlign - used % kAlign;
  dict.append(pad, ' ');
  dict.push_back('\n');
  if (dict.size() > 0xFFFF)
    throw Error(Errc::InvalidArgument, "NPY header too large for version 1.0");

  std::string out(kMagic.begin(), kMagic.end());
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(dict.size() & 0xFF));
  out.push_back(static_cast<char>((dict.size() >> 8) & 0xFF));
  out += dict;
  return out;
}

std::string encode_array(const EmbeddingMatrix &m, bool as_vector) {
  if (as_vector && m.rows() != 1)
    throw Error(Errc::InvalidArgument, "only a single-row matrix can be written as a vector");
  std::string out = encode_header(as_vector ? std::vector<std::size_t>{m.dim()}
                                            : std::vector<std::size_t>{m.rows(), m.dim()});

  const auto data = m.data();
  const std::size_t start = out.size();
  out.resize(start + data.size() * sizeof(float));
  std::memcpy(out.data() + start, data.data(), data.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t k = start; k + 4 <= out.size(); k += 4) {
      std::swap(out[k], out[k + 3]);
      std::swap(out[k + 1], out[k + 2]);
    }
  }
  return out;
}

void write_array(const EmbeddingMatrix &m, const std::filesystem::path &path, bool as_vector) {
  const std::string bytes = encode_array(m, as_vector);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw Error(Errc::IoError, "short write to " + path.string());
}

} // namespace awt::io
