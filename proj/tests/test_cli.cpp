#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "pmgeo/config.hpp"
#include "pmgeo/io.hpp"
#include "pmgeo/pipeline.hpp"

using namespace pmgeo;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "tag": "tiny",
  "toy": {
    "n_classes": 3, "n_per_class": 200, "n_test_per_class": 40, "hidden": [16],
    "adversarial_epsilons": [0.01, 0.02], "train": {"epochs": 12},
    "n_pm_samples": 60, "n_pm_samples_per_class": 20, "n_distance_inits": 4,
    "scaling_grid": [20, 40, 60]
  },
  "ellipsoid": {"ambient_dim": 40, "d_grid": [1, 10, 40], "n_points": 10},
  "spectral": {"baseline_trials": 10, "n_control_images": 4, "control_side": 16}
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pmgeo_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig cfg = config_from_json(kTiny);
  cfg.output_dir = out;
  return cfg;
}

std::string body(const fs::path& p) { return read_file(p); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

int run(const std::string& args) {
  const std::string cmd = std::string(PMGEO_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig d = config_from_json("{}");
  CHECK(d.toy.adversarial_epsilons.size() == 2);
  CHECK(config_from_json(config_to_json(d)).toy.n_pm_samples == d.toy.n_pm_samples);
  CHECK(config_to_json(config_from_json(config_to_json(d))) == config_to_json(d));
  CHECK_THROWS_AS(config_from_json(R"({"toy": {"n_clases": 3}})"), InvalidInput);
  CHECK_THROWS_AS(config_from_json(R"({"toy": {"n_classes": "three"}})"), InvalidInput);
  CHECK_THROWS_AS(config_from_json("{not json"), InvalidInput);
  CHECK_THROWS_AS(config_from_json(R"({"toy": {"target_class": 12}})"), InvalidInput);

  ExperimentConfig a = d, b = d;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.toy.sample_seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 8);
}

TEST_CASE("output directory override from the environment") {
  const fs::path dir = scratch("env");
  write_file(dir / "c.json", R"({"output_dir": "from_file"})");
  setenv("PMGEO_OUTPUT_DIR", "from_env", 1);
  CHECK(load_config(dir / "c.json").output_dir == "from_env");
  unsetenv("PMGEO_OUTPUT_DIR");
  CHECK(load_config(dir / "c.json").output_dir == "from_file");
}

TEST_CASE("toy pipeline: schema, provenance, determinism") {
  const fs::path a = scratch("toy_a"), b = scratch("toy_b");
  const ToyPipelineResult r = cmd_toy_pipeline(tiny(a));
  cmd_toy_pipeline(tiny(b));
  REQUIRE(r.models.size() == 3);

  const auto rows = lines(body(a / "toy" / "summary.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "# config_hash=" + r.config_hash);
  const auto ncol = std::count(rows[1].begin(), rows[1].end(), ',');
  for (int i = 2; i < 5; ++i) {
    CHECK(std::count(rows[i].begin(), rows[i].end(), ',') == ncol);
    CHECK(rows[i].find(",,") == std::string::npos);
    CHECK(rows[i].back() != ',');
  }
  CHECK(rows[2].rfind("standard,", 0) == 0);
  CHECK(rows[3].rfind("at0.01,", 0) == 0);
  CHECK(rows[4].rfind("at0.02,", 0) == 0);

  for (const auto& e : fs::directory_iterator(a / "toy")) {
    const fs::path p = e.path();
    if (p.extension() == ".csv") {
      CHECK(lines(body(p))[0] == "# config_hash=" + r.config_hash);
      CHECK(body(p) == body(b / "toy" / p.filename()));
    }
    if (p.extension() == ".pmgs" || p.extension() == ".pmgm") CHECK(body(p) == body(b / "toy" / p.filename()));
  }
  CHECK(body(a / "toy" / "metadata.json").find("\"status\": \"ok\"") != std::string::npos);

  const SampleSet pm = read_sample_set(a / "toy" / "pm_standard.pmgs");
  CHECK(pm.meta.label == 0);
  CHECK(pm.meta.attempts == 60);
}

TEST_CASE("toy pipeline failure is stage tagged and keeps earlier outputs") {
  const fs::path dir = scratch("toy_fail");
  ExperimentConfig cfg = tiny(dir);
  cfg.toy.pga.max_iters = 0;  // uniform starts never reach the threshold
  cfg.toy.pga.threshold = 0.999999999;
  cfg.toy.pga.adam_fallback = false;
  try {
    cmd_toy_pipeline(cfg);
    FAIL("expected a failure");
  } catch (const EmptyResult& e) {
    CHECK(std::string(e.what()).rfind("sample standard class 0", 0) == 0);
  }
  CHECK(fs::exists(dir / "toy" / "model_standard.pmgm"));
  CHECK(fs::exists(dir / "toy" / "dimension_data.csv"));
  CHECK(body(dir / "toy" / "metadata.json").find("\"status\": \"failed\"") != std::string::npos);
}

TEST_CASE("spectral suite") {
  const fs::path dir = scratch("spectral");
  const ExperimentConfig cfg = tiny(dir);
  try {
    cmd_spectral_suite(cfg);
    FAIL("expected missing input");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("data_class0.pmgs") != std::string::npos);
  }
  cmd_toy_pipeline(cfg);
  const SpectralSuiteResult r = cmd_spectral_suite(cfg);
  REQUIRE(r.sets.size() == 6);
  CHECK(r.sets[0].name == "data");
  for (const AlignmentScore& s : r.sets[0].alignment) CHECK(s.score == doctest::Approx(1.0));
  CHECK(std::abs(r.sets[4].psd.alpha) < 0.3);
  for (const char* f : {"alignment.csv", "psd_slopes.csv", "spectrum_density.csv", "psd_data.dat", "spectrum_data.dat"})
    CHECK(fs::exists(dir / "spectral" / f));
}

TEST_CASE("ellipsoid sweep writes CSV and SVG") {
  const fs::path dir = scratch("ellipsoid");
  const auto rows = cmd_ellipsoid_fig3(tiny(dir));
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].intrinsic_dim == 40);
  CHECK(lines(body(dir / "ellipsoid" / "fig3.csv")).size() == 5);
  CHECK(body(dir / "ellipsoid" / "fig3.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("exit");
  write_file(dir / "bad.json", R"({"toy": {"bogus": 1}})");
  CHECK(run("toy-pipeline --config " + (dir / "bad.json").string()) == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("dim -i " + (dir / "missing.pmgs").string()) == 2);

  SampleSet s;
  s.points = RowMatrix::NullaryExpr(40, 5, [](Eigen::Index i, Eigen::Index j) {
    return std::fmod(0.6180339887 * static_cast<double>((i * 5 + j + 1) * (i + 2)), 1.0);
  });
  s.meta.label = 1;
  write_sample_set(dir / "s.pmgs", s);
  CHECK(run("convert " + (dir / "s.pmgs").string() + " " + (dir / "s.csv").string()) == 0);
  CHECK(run("convert " + (dir / "s.csv").string() + " " + (dir / "t.pmgs").string()) == 0);
  CHECK(read_sample_set(dir / "t.pmgs").points == s.points);
  CHECK(run("dim --estimator 2nn -i " + (dir / "s.csv").string() + " -o " + (dir / "d.csv").string()) == 0);

  std::string bytes = read_file(dir / "s.pmgs");
  bytes[40] ^= 0x7;
  write_file(dir / "corrupt.pmgs", bytes);
  CHECK(run("convert " + (dir / "corrupt.pmgs").string() + " " + (dir / "x.csv").string()) == 4);

  MlpModel m = MlpModel::zeros({5, 2});
  m.weights[0].row(0).setConstant(1e308);
  m.weights[0].row(1).setConstant(-1e308);
  write_model(dir / "m.pmgm", m);
  CHECK(run("sample-pm --model " + (dir / "m.pmgm").string() + " --class 1 -n 2 -o " + (dir / "pm.pmgs").string()) == 3);

  MlpModel ok = MlpModel::random({5, 2}, Activation::tanh, 1);
  write_model(dir / "ok.pmgm", ok);
  CHECK(run("sample-pm --model " + (dir / "ok.pmgm").string() + " --class 1 -n 3 --step-size 0.5 -o " +
            (dir / "pm.pmgs").string()) == 0);
  CHECK(run("attack --model " + (dir / "ok.pmgm").string() + " -i " + (dir / "s.pmgs").string() + " --epsilon 0.1 -o " +
            (dir / "a.csv").string()) == 0);
}
