#include "awt/npy.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <random>

using namespace awt;
using awt::testing::fixture;
using awt::testing::slurp;
using awt::testing::spit;
using awt::testing::TempDir;

namespace {

std::string unhex(const std::string &hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
    out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

} // namespace

TEST_CASE("headers match numpy byte for byte") {
  const auto headers = nlohmann::json::parse(slurp(fixture("npy/headers.json")));
  for (const auto &[key, hex] : headers.items()) {
    std::vector<std::size_t> shape;
    std::size_t pos = 0;
    while (pos <= key.size()) {
      auto end = key.find(',', pos);
      if (end == std::string::npos)
        end = key.size();
      shape.push_back(std::stoull(key.substr(pos, end - pos)));
      pos = end + 1;
    }
    const std::string want = unhex(hex.get<std::string>());
    const std::string got = io::encode_header(shape);
    CHECK_MESSAGE(got == want, key);
    CHECK(got.size() % 64 == 0);
    CHECK(got.back() == '\n');
    const auto parsed = io::parse_npy_header(want);
    CHECK(parsed.shape == shape);
    CHECK(parsed.header_bytes == want.size());
  }
}

TEST_CASE("files written by numpy round-trip exactly") {
  for (const char *name : {"row_1x4.npy", "identity_2x2.npy", "random_51x512.npy",
                           "random_3x7.npy"}) {
    const std::string bytes = slurp(fixture(std::string("npy/") + name));
    const auto m = io::decode_array(bytes, io::Normalize::no);
    CHECK_MESSAGE(io::encode_array(m) == bytes, name);
  }
  const std::string row = slurp(fixture("npy/row_1x4.npy"));
  CHECK(row.size() == 144);
  CHECK(io::parse_npy_header(row).header_bytes == 128);
  const auto m = io::decode_array(row, io::Normalize::no);
  CHECK(m.rows() == 1);
  CHECK(m.row(0)[3] == 4.0f);

  const std::string big = slurp(fixture("npy/random_51x512.npy"));
  CHECK(big.size() - io::parse_npy_header(big).header_bytes == 104448);
}

TEST_CASE("vectors read as one-row matrices") {
  const std::string bytes = slurp(fixture("npy/vector_3.npy"));
  const auto m = io::decode_array(bytes, io::Normalize::no);
  CHECK(m.rows() == 1);
  CHECK(m.dim() == 3);
  CHECK(m.row(0)[1] == 0.5f);
  CHECK(io::encode_array(m, true) == bytes);
  CHECK_THROWS_CODE(io::encode_array(EmbeddingMatrix::from_rows({{1}, {2}}), true),
                    Errc::InvalidArgument);
}

TEST_CASE("rejections") {
  CHECK_THROWS_CODE(io::decode_array(slurp(fixture("npy/f8_2x2.npy"))), Errc::UnsupportedDtype);
  CHECK_THROWS_CODE(io::decode_array(slurp(fixture("npy/big_endian_2x2.npy"))),
                    Errc::UnsupportedDtype);
  CHECK_THROWS_CODE(io::decode_array(slurp(fixture("npy/fortran_2x3.npy"))),
                    Errc::UnsupportedOrder);
  CHECK_THROWS_CODE(io::decode_array(slurp(fixture("npy/cube_2x2x2.npy"))),
                    Errc::UnsupportedShape);
  CHECK_THROWS_CODE(io::decode_array(slurp(fixture("npy/truncated_3x7.npy"))),
                    Errc::TruncatedPayload);
  CHECK_THROWS_CODE(io::decode_array(slurp(fixture("npy/bad_magic.npy"))), Errc::BadMagic);
  CHECK_THROWS_CODE(io::decode_array(""), Errc::BadMagic);
  CHECK_THROWS_CODE(io::read_array("/nonexistent/file.npy"), Errc::IoError);

  const std::string good = slurp(fixture("npy/random_3x7.npy"));
  CHECK_THROWS_CODE(io::decode_array(good.substr(0, 9)), Errc::BadMagic);
  CHECK_THROWS_CODE(io::decode_array(good.substr(0, 60)), Errc::TruncatedPayload);
}

TEST_CASE("read_array normalizes unless told not to") {
  TempDir dir;
  const auto path = dir.path() / "m.npy";
  io::write_array(EmbeddingMatrix::from_rows({{3, 4}, {0, 2}}), path);
  const auto n = io::read_array(path);
  CHECK(n.row(0)[0] == doctest::Approx(0.6));
  CHECK(n.row(1)[1] == 1.0f);
  const auto raw = io::read_array(path, io::Normalize::no);
  CHECK(raw.row(0)[0] == 3.0f);
  CHECK(slurp(path) == io::encode_array(raw));

  io::write_array(EmbeddingMatrix::from_rows({{0, 0}}), path);
  CHECK_THROWS_CODE(io::read_array(path), Errc::ZeroNormRow);
}

TEST_CASE("random round trips through files") {
  TempDir dir;
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + trial % 13, dim = 1 + (trial * 7) % 97;
    std::vector<float> data(rows * dim);
    for (auto &x : data) {
      do {
        const std::uint32_t b = bits(rng);
        std::memcpy(&x, &b, sizeof x);
      } while (!std::isfinite(x));
    }
    const EmbeddingMatrix m(rows, dim, data);
    const auto path = dir.path() / "r.npy";
    io::write_array(m, path);
    const std::string bytes = slurp(path);
    const auto back = io::read_array(path, io::Normalize::no);
    CHECK(back == m);
    CHECK(io::encode_array(back) == bytes);
    const auto h = io::read_array_header(path);
    CHECK(h.shape == std::vector<std::size_t>{rows, dim});
    CHECK(h.descr == "<f4");
  }
}

TEST_CASE("version 2 headers are accepted") {
  const std::string v1 = slurp(fixture("npy/random_3x7.npy"));
  const auto h = io::parse_npy_header(v1);
  const std::string dict = v1.substr(10, h.header_bytes - 10);
  std::string v2 = "\x93NUMPY";
  v2 += '\x02';
  v2 += '\x00';
  const std::uint32_t len = static_cast<std::uint32_t>(dict.size());
  for (int k = 0; k < 4; ++k)
    v2 += static_cast<char>((len >> (8 * k)) & 0xFF);
  v2 += dict;
  v2 += v1.substr(h.header_bytes);
  CHECK(io::decode_array(v2, io::Normalize::no) == io::decode_array(v1, io::Normalize::no));
}
