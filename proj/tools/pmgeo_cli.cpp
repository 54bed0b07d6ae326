#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pmgeo/attack.hpp"
#include "pmgeo/config.hpp"
#include "pmgeo/dimension.hpp"
#include "pmgeo/io.hpp"
#include "pmgeo/pipeline.hpp"
#include "pmgeo/sampler.hpp"

using namespace pmgeo;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string output_dir;
  std::string tag;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON experiment config (defaults when omitted)");
  sub->add_option("--output-dir", c.output_dir, "Output directory (overrides config and PMGEO_OUTPUT_DIR)");
  sub->add_option("--tag", c.tag, "Experiment tag");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else if (const char* dir = std::getenv("PMGEO_OUTPUT_DIR"); dir && *dir) {
    cfg.output_dir = dir;
  }
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  if (!c.tag.empty()) cfg.tag = c.tag;
  return cfg;
}

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

SampleSet read_any(const fs::path& p) { return is_csv(p) ? read_sample_set_csv(p) : read_sample_set(p); }

void write_any(const fs::path& p, const SampleSet& s) {
  if (is_csv(p))
    write_sample_set_csv(p, s);
  else
    write_sample_set(p, s);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_file(out, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perceptual-manifold geometry experiments"};
  app.require_subcommand(1);

  Common common;

  // toy-pipeline
  auto* toy = app.add_subcommand("toy-pipeline", "Train toy models and measure their perceptual manifolds");
  add_common(toy, common);
  std::optional<std::uint64_t> data_seed, model_seed, sample_seed;
  std::optional<Eigen::Index> n_pm;
  std::optional<int> epochs, target;
  toy->add_option("--data-seed", data_seed);
  toy->add_option("--model-seed", model_seed);
  toy->add_option("--sample-seed", sample_seed);
  toy->add_option("--n-pm-samples", n_pm);
  toy->add_option("--epochs", epochs);
  toy->add_option("--target-class", target);

  // ellipsoid
  auto* ell = app.add_subcommand("ellipsoid", "Monte Carlo distance to random ellipsoids over a d grid");
  add_common(ell, common);
  std::optional<Eigen::Index> ell_dim;
  std::optional<double> r_lo, r_hi;
  std::vector<Eigen::Index> d_grid;
  std::optional<std::size_t> n_points;
  std::optional<std::uint64_t> ell_seed;
  bool no_svg = false;
  ell->add_option("--ambient-dim", ell_dim);
  ell->add_option("--radius-low", r_lo);
  ell->add_option("--radius-high", r_hi);
  ell->add_option("--d-grid", d_grid, "Values of d");
  ell->add_option("--points", n_points, "Uniform points per d");
  ell->add_option("--seed", ell_seed);
  ell->add_flag("--no-svg", no_svg);

  // sample-pm
  auto* spm = app.add_subcommand("sample-pm", "Sample a class's perceptual manifold by projected gradient ascent");
  std::string model_path, out_path, runs_path;
  int cls = 0;
  Eigen::Index n_samples = 1000;
  std::uint64_t seed = 0;
  PgaConfig pga;
  std::string optimizer = "plain";
  spm->add_option("--model", model_path)->required();
  spm->add_option("--class", cls)->required();
  spm->add_option("-n,--n-samples", n_samples);
  spm->add_option("--seed", seed);
  spm->add_option("--step-size", pga.step_size);
  spm->add_option("--threshold", pga.threshold);
  spm->add_option("--max-iters", pga.max_iters);
  spm->add_option("--optimizer", optimizer, "plain or adam");
  spm->add_option("--momentum", pga.momentum);
  spm->add_option("--noise-sigma", pga.noise_sigma);
  spm->add_option("-o,--out", out_path, "Sample set (.pmgs, or .csv)")->required();
  spm->add_option("--runs", runs_path, "Per-run CSV");

  // dim
  auto* dim = app.add_subcommand("dim", "Intrinsic dimension of a sample set");
  std::string dim_in, dim_out, estimator = "pr";
  std::vector<Eigen::Index> grid;
  dim->add_option("-i,--input", dim_in)->required();
  dim->add_option("--estimator", estimator, "pr or 2nn");
  dim->add_option("--scaling", grid, "Sample counts for a scaling curve");
  dim->add_option("--seed", seed);
  dim->add_option("-o,--out", dim_out, "CSV (stdout when omitted)");

  // attack
  auto* att = app.add_subcommand("attack", "Robust accuracy under an L-infinity PGD attack");
  std::string att_in, att_out;
  std::optional<int> label;
  AttackConfig ac;
  att->add_option("--model", model_path)->required();
  att->add_option("-i,--input", att_in, "Sample set; its label applies to every point")->required();
  att->add_option("--label", label, "Override the sample set's label");
  att->add_option("--epsilon", ac.epsilon);
  att->add_option("--steps", ac.steps);
  att->add_option("--step-size", ac.step_size);
  att->add_option("--restarts", ac.restarts);
  att->add_option("--seed", ac.seed);
  att->add_option("-o,--out", att_out, "Per-point CSV (stdout when omitted)");

  // spectral
  auto* spec = app.add_subcommand("spectral", "Spectrum, alignment and PSD diagnostics on toy-pipeline outputs");
  add_common(spec, common);

  // convert
  auto* conv = app.add_subcommand("convert", "Convert a sample set between CSV and binary (by extension)");
  std::string conv_in, conv_out;
  conv->add_option("input", conv_in)->required();
  conv->add_option("output", conv_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*toy) {
      ExperimentConfig cfg = resolve(common);
      if (data_seed) cfg.toy.data_seed = *data_seed;
      if (model_seed) cfg.toy.model_seed = *model_seed;
      if (sample_seed) cfg.toy.sample_seed = *sample_seed;
      if (n_pm) cfg.toy.n_pm_samples = *n_pm;
      if (epochs) cfg.toy.train.epochs = *epochs;
      if (target) cfg.toy.target_class = *target;
      const ToyPipelineResult r = cmd_toy_pipeline(cfg);
      std::printf("config_hash %s  data PR %.3f\n", r.config_hash.c_str(), r.data_pr.estimate);
      std::printf("%-10s %8s %8s %8s %10s %10s\n", "model", "clean", "robust", "PM PR", "d(noise)", "d(data)");
      for (const ToyModelReport& m : r.models)
        std::printf("%-10s %8.3f %8.3f %8.2f %10.4f %10.4f\n", m.name.c_str(), m.clean_accuracy, m.robust_accuracy,
                    m.mean_class_pm_pr, m.mean_dist_noise, m.mean_dist_data);
      std::printf("outputs in %s\n", (cfg.output_dir / "toy").string().c_str());
    } else if (*ell) {
      ExperimentConfig cfg = resolve(common);
      EllipsoidConfig& e = cfg.ellipsoid;
      if (ell_dim) e.ambient_dim = *ell_dim;
      if (r_lo) e.radius_low = *r_lo;
      if (r_hi) e.radius_high = *r_hi;
      if (!d_grid.empty()) e.d_grid = d_grid;
      if (n_points) e.n_points = *n_points;
      if (ell_seed) e.seed = *ell_seed;
      if (no_svg) e.svg = false;
      for (const MonteCarloDistance& m : cmd_ellipsoid_fig3(cfg))
        std::printf("d=%-6ld analytic %10.3f  boundary %10.3f +- %.3f  surface %10.3f\n",
                    static_cast<long>(m.intrinsic_dim), m.analytic, m.boundary.mean_sq_dist, m.boundary.sem,
                    m.surface.mean_sq_dist);
    } else if (*spm) {
      pga.optimizer = pga_optimizer_from_string(optimizer);
      const MlpModel model = read_model(model_path);
      const PmSampling pm = sample_pm(model, cls, n_samples, pga, seed);
      write_any(out_path, pm.samples);
      if (!runs_path.empty()) {
        std::string text = pga_runs_csv_header() + "\n";
        for (const PmSampleResult& r : pm.runs) text += pga_run_csv_row(r) + "\n";
        write_file(runs_path, text);
      }
      std::printf("%llu of %llu runs reached p > %g%s\n", static_cast<unsigned long long>(pm.samples.meta.successes),
                  static_cast<unsigned long long>(pm.samples.meta.attempts), pga.threshold,
                  pm.low_yield ? " (low yield)" : "");
    } else if (*dim) {
      const SampleSet s = read_any(dim_in);
      const Estimator est = estimator_from_string(estimator);
      const DimensionReport r = est == Estimator::participation_ratio ? pr_of_samples(s, seed) : two_nn(s);
      std::string text = dimension_csv_header() + "\n" + dimension_csv_row(r, s.meta.label) + "\n";
      if (!grid.empty()) {
        text += "n,estimate\n";
        for (const ScalingPoint& p : scaling_curve(s.points, est, grid, seed))
          text += std::to_string(p.n) + "," + format_double(p.estimate) + "\n";
      }
      emit(dim_out, text);
    } else if (*att) {
      const MlpModel model = read_model(model_path);
      const SampleSet s = read_any(att_in);
      const int y = label ? *label : static_cast<int>(s.meta.label);
      if (y < 0) throw InvalidInput("attack: the sample set has no label; pass --label");
      const std::vector<int> labels(static_cast<std::size_t>(s.size()), y);
      const RobustAccuracyReport r = robust_accuracy(model, s.points, labels, ac);
      std::string text = attack_csv_header() + "\n";
      for (const AttackRecord& rec : r.records) text += attack_csv_row(rec) + "\n";
      emit(att_out, text);
      std::fprintf(stderr, "clean %.4f robust %.4f (eps %g)\n", r.clean_accuracy, r.robust_accuracy, ac.epsilon);
    } else if (*spec) {
      const ExperimentConfig cfg = resolve(common);
      const SpectralSuiteResult r = cmd_spectral_suite(cfg);
      std::printf("k = %ld\n", static_cast<long>(r.k));
      for (const SpectralSetReport& s : r.sets) std::printf("%-16s PSD alpha %.3f\n", s.name.c_str(), s.psd.alpha);
    } else if (*conv) {
      write_any(conv_out, read_any(conv_in));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
