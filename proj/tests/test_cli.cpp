#include "cli.hpp"

#include "awt/npy.hpp"
#include "awt/prompting.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <sstream>

using namespace awt;
using awt::testing::fixture;
using awt::testing::slurp;
using awt::testing::spit;
using awt::testing::TempDir;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome awt_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "awt");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_matrix(const std::filesystem::path &p, std::vector<std::vector<float>> rows) {
  io::write_array(EmbeddingMatrix::from_rows(rows), p);
}

} // namespace

TEST_CASE("evaluate on the synthetic task") {
  TempDir dir;
  awt::testing::write_synthetic_task({}, dir.path());
  const std::string manifest = (dir.path() / "manifest.json").string();
  for (const char *mode : {"awt", "raw", "ensemble", "ot-uniform"}) {
    const auto r = awt_cli({"evaluate", "--manifest", manifest, "--mode", mode});
    CHECK_MESSAGE(r.code == 0, r.err);
    CHECK_MESSAGE(r.out.rfind("top1=100.00 images=30 mode=", 0) == 0, r.out);
  }
  const auto out = dir.path() / "r.json";
  const auto r = awt_cli({"evaluate", "--manifest", manifest, "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(slurp(out));
  CHECK(doc["top1_accuracy"] == 1.0);
  CHECK(doc["n_images"] == 30);
  CHECK(doc["per_image"].size() == 30);
}

TEST_CASE("evaluate exit codes") {
  TempDir dir;
  CHECK(awt_cli({"evaluate"}).code == cli::kUsage);
  CHECK(awt_cli({}).code == cli::kUsage);
  CHECK(awt_cli({"bogus"}).code == cli::kUsage);
  CHECK(awt_cli({"--help"}).code == cli::kOk);

  spit(dir.path() / "bad.json", "{\"dim\": 3}");
  const auto bad = awt_cli({"evaluate", "--manifest", (dir.path() / "bad.json").string()});
  CHECK(bad.code == cli::kDataError);
  CHECK(bad.err.find("error:") != std::string::npos);
  CHECK(awt_cli({"evaluate", "--manifest", (dir.path() / "missing.json").string()}).code ==
        cli::kDataError);

  awt::testing::write_synthetic_task({}, dir.path());
  const std::string manifest = (dir.path() / "manifest.json").string();
  CHECK(awt_cli({"evaluate", "--manifest", manifest, "--tau", "0"}).code == cli::kUsage);
  CHECK(awt_cli({"evaluate", "--manifest", manifest, "--epsilon", "-1"}).code == cli::kUsage);
  CHECK(awt_cli({"evaluate", "--manifest", manifest, "--mode", "nope"}).code == cli::kUsage);

  const auto tight = awt_cli({"evaluate", "--manifest", manifest, "--max-iter", "1",
                              "--tolerance", "1e-15", "--strict"});
  CHECK(tight.code == cli::kRuntimeError);
  CHECK(tight.out.find("non_converged=0") == std::string::npos);
}

TEST_CASE("config file supplies defaults that flags override") {
  TempDir dir;
  awt::testing::write_synthetic_task({}, dir.path());
  const std::string manifest = (dir.path() / "manifest.json").string();
  spit(dir.path() / "awt.toml", "[evaluate]\nmode = \"raw\"\nmanifest = \"" + manifest + "\"\n");
  const std::string cfg = (dir.path() / "awt.toml").string();

  const auto from_file = awt_cli({"--config", cfg, "evaluate"});
  CHECK_MESSAGE(from_file.code == 0, from_file.err);
  CHECK(from_file.out.find("mode=raw") != std::string::npos);

  const auto overridden = awt_cli({"--config", cfg, "evaluate", "--mode", "awt"});
  CHECK(overridden.out.find("mode=awt") != std::string::npos);
}

TEST_CASE("validate") {
  TempDir dir;
  awt::testing::write_synthetic_task({}, dir.path());
  const std::string manifest = (dir.path() / "manifest.json").string();
  CHECK(awt_cli({"validate", "--manifest", manifest}).code == 0);
  std::filesystem::remove(dir.path() / "images" / "3.npy");
  const auto r = awt_cli({"validate", "--manifest", manifest});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("images[3].views_path") != std::string::npos);
}

TEST_CASE("plan") {
  TempDir dir;
  awt::testing::SyntheticSpec spec;
  const auto task = awt::testing::write_synthetic_task(spec, dir.path());
  const std::string manifest = (dir.path() / "manifest.json").string();

  const auto r = awt_cli({"plan", "--manifest", manifest, "--image", "img4", "--class",
                          "class1", "--epsilon", "0.01"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto doc = json::parse(r.out);
  CHECK(doc["image"] == "img4");
  const auto rows = doc["row_weights"].get<std::vector<double>>();
  const auto cols = doc["col_weights"].get<std::vector<double>>();
  CHECK(rows.size() == spec.views + 1);
  CHECK(cols.size() == spec.descriptions + 1);
  const auto plan = doc["plan"].get<std::vector<std::vector<double>>>();
  double max_err = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double s = 0;
    for (double x : plan[i])
      s += x;
    max_err = std::max(max_err, std::abs(s - rows[i]));
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    double s = 0;
    for (const auto &row : plan)
      s += row[j];
    max_err = std::max(max_err, std::abs(s - cols[j]));
  }
  CHECK(max_err <= 1e-6);

  const auto single = awt_cli({"plan", "--manifest", manifest, "--image", "img0", "--class",
                               "class0", "--n-views", "0", "--m-desc", "0"});
  REQUIRE(single.code == 0);
  CHECK(json::parse(single.out)["plan"] == json::parse("[[1.0]]"));

  CHECK(awt_cli({"plan", "--manifest", manifest, "--image", "img0", "--class", "nope"}).code ==
        cli::kDataError);
  CHECK(awt_cli({"plan", "--manifest", manifest, "--image", "x", "--class", "class0"}).code ==
        cli::kDataError);
  CHECK(awt_cli({"plan", "--manifest", manifest, "--image", "img0", "--class", "class0",
                 "--mode", "raw"})
            .code == cli::kUsage);
}

TEST_CASE("sinkhorn and exact on files") {
  TempDir dir;
  const auto p = [&](const char *n) { return (dir.path() / n).string(); };
  write_matrix(p("c.npy"), {{0, 1}, {1, 0}});
  write_matrix(p("u.npy"), {{1, 1}});
  write_matrix(p("a.npy"), {{0.6f, 0.4f}});
  write_matrix(p("b.npy"), {{0.4f, 0.6f}});

  const auto ex = awt_cli({"exact", "--cost", p("c.npy"), "--a", p("a.npy"), "--b", p("b.npy")});
  REQUIRE_MESSAGE(ex.code == 0, ex.err);
  const auto exact = json::parse(ex.out);
  CHECK(exact["cost"].get<double>() == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(exact["plan"][0][1].get<double>() == doctest::Approx(0.2).epsilon(1e-6));

  const auto sk = awt_cli({"sinkhorn", "--cost", p("c.npy"), "--a", p("a.npy"), "--b",
                           p("b.npy"), "--epsilon", "0.01", "--out", p("s.json")});
  REQUIRE_MESSAGE(sk.code == 0, sk.err);
  const auto s = json::parse(slurp(p("s.json")));
  CHECK(std::abs(s["cost"].get<double>() - 0.2) <= 1e-3);
  CHECK(s["converged"] == true);

  // Uniform marginals on a symmetric cost: the exact optimum is zero.
  const auto sym = json::parse(
      awt_cli({"sinkhorn", "--cost", p("c.npy"), "--a", p("u.npy"), "--b", p("u.npy")}).out);
  CHECK(sym["cost"].get<double>() >= 0);
  CHECK(sym["cost"].get<double>() <= 1e-3);

  write_matrix(p("c3.npy"), {{0, 1, 1}, {1, 0, 1}});
  CHECK(awt_cli({"exact", "--cost", p("c3.npy"), "--a", p("a.npy"), "--b", p("b.npy")}).code ==
        cli::kDataError);
  CHECK(awt_cli({"sinkhorn", "--cost", p("c.npy"), "--a", p("a.npy"), "--b", p("b.npy"),
                 "--epsilon", "0"})
            .code == cli::kUsage);
  CHECK(awt_cli({"sinkhorn", "--cost", p("c.npy"), "--a", p("a.npy"), "--b", p("b.npy"),
                 "--epsilon", "0.001", "--max-iter", "1", "--tolerance", "1e-14", "--strict"})
            .code == cli::kRuntimeError);
}

TEST_CASE("gen-descriptions replays recorded replies") {
  TempDir dir;
  const std::string out = (dir.path() / "d.json").string();
  const auto r = awt_cli({"gen-descriptions", "--dataset-name", "imagenet-sketch",
                          "--dataset-desc",
                          "consists of black and white sketches of ImageNet categories",
                          "--classes", fixture("prompting/sketch/classes.txt").string(),
                          "--questions", "2", "--m", "4", "--jobs", "2", "--fixtures",
                          fixture("prompting/sketch").string(), "--out", out});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(slurp(out) == slurp(fixture("prompting/sketch/expected.json")));

  const auto fifty = awt_cli(
      {"gen-descriptions", "--dataset-name", "pets", "--dataset-desc",
       "contains photos of household pets", "--classes",
       fixture("prompting/fifty/classes.txt").string(), "--fixtures",
       fixture("prompting/fifty").string()});
  REQUIRE_MESSAGE(fifty.code == 0, fifty.err);
  CHECK(fifty.out == slurp(fixture("prompting/fifty/expected.json")));

  // A reply that was never recorded is a runtime failure.
  const auto unrecorded = awt_cli(
      {"gen-descriptions", "--dataset-desc", "is something else", "--classes",
       fixture("prompting/sketch/classes.txt").string(), "--fixtures",
       fixture("prompting/sketch").string()});
  CHECK(unrecorded.code == cli::kRuntimeError);
}

TEST_CASE("gen-descriptions without a key or fixtures is a usage error") {
  ::unsetenv(prompt::kApiKeyEnv);
  const auto r = awt_cli({"gen-descriptions", "--dataset-desc", "x", "--classes",
                          fixture("prompting/sketch/classes.txt").string()});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find(prompt::kApiKeyEnv) != std::string::npos);
  CHECK(awt_cli({"gen-descriptions", "--dataset-desc", "x", "--dataset-desc-file", "f",
                 "--classes", "c"})
            .code == cli::kUsage);
}

TEST_CASE("sweep and determinism across job counts") {
  TempDir dir;
  awt::testing::write_synthetic_task({}, dir.path());
  const std::string manifest = (dir.path() / "manifest.json").string();
  const auto one = (dir.path() / "one.json").string();
  const auto eight = (dir.path() / "eight.json").string();

  const auto r = awt_cli({"sweep", "--manifest", manifest, "--axis", "n", "--values", "0,2,5",
                          "--jobs", "1", "--out", one});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("n=2 top1=") != std::string::npos);
  const auto doc = json::parse(slurp(one));
  CHECK(doc["axis"] == "n");
  CHECK(doc["reports"].size() == 3);
  REQUIRE(awt_cli({"sweep", "--manifest", manifest, "--axis", "n", "--values", "0,2,5",
                   "--jobs", "8", "--out", eight})
              .code == 0);
  CHECK(slurp(one) == slurp(eight));

  CHECK(awt_cli({"sweep", "--manifest", manifest, "--axis", "n", "--values", "1,x"}).code ==
        cli::kUsage);
  CHECK(awt_cli({"sweep", "--manifest", manifest, "--axis", "depth", "--values", "1"}).code ==
        cli::kUsage);

  REQUIRE(awt_cli({"evaluate", "--manifest", manifest, "--jobs", "1", "--out", one}).code == 0);
  REQUIRE(awt_cli({"evaluate", "--manifest", manifest, "--jobs", "8", "--out", eight}).code == 0);
  CHECK(slurp(one) == slurp(eight));
}
