#include "pmgeo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "pmgeo/attack.hpp"
#include "pmgeo/io.hpp"
#include "pmgeo/rng.hpp"
#include "pmgeo/sampler.hpp"
#include "pmgeo/synth.hpp"

namespace pmgeo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Rethrows a library error with the stage name in front, keeping its kind.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), name + ": " + e.what());
  } catch (const std::bad_alloc&) {
    throw Error(ErrorKind::numerical_failure, name + ": out of memory");
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create output directory " + dir.string());
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// CSV text that starts with the provenance line.
class Csv {
 public:
  Csv(const std::string& hash, const std::string& header) { os_ << "# config_hash=" << hash << '\n' << header << '\n'; }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }
  void line(const std::string& s) { os_ << s << '\n'; }
  void save(const fs::path& path) const { write_file(path, os_.str()); }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }
  std::ostringstream os_;
};

std::string eps_name(double eps) {
  std::ostringstream os;
  os << "at" << eps;
  return os.str();
}

RowMatrix prefix_rows(const RowMatrix& m, Eigen::Index n) { return m.topRows(std::min(n, m.rows())); }

// NI rows spread evenly over the (class-major) set.
SampleSet strided_rows(const SampleSet& s, Eigen::Index n) {
  SampleSet out;
  out.meta = s.meta;
  n = std::min(n, s.size());
  out.points.resize(n, s.dim());
  for (Eigen::Index i = 0; i < n; ++i) out.points.row(i) = s.points.row(i * s.size() / n);
  return out;
}

SampleSet uniform_inits(Eigen::Index n, Eigen::Index dim, std::uint64_t seed) {
  SampleSet s;
  s.meta.source = "noise";
  s.meta.seed = seed;
  s.points.resize(n, dim);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) s.points.row(i) = rng.uniform_vector(dim).transpose();
  return s;
}

// Mean of the finite entries; NaN when there are none.
double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(n);
}

std::vector<Eigen::Index> scaling_grid(const ToyConfig& t, Eigen::Index n) {
  if (!t.scaling_grid.empty()) {
    std::vector<Eigen::Index> g;
    for (Eigen::Index v : t.scaling_grid)
      if (v <= n) g.push_back(v);
    if (!g.empty()) return g;
  }
  return log_grid(std::min<Eigen::Index>(50, n), n, 8);
}

void add_dimension_rows(Csv& csv, const std::string& set, const SampleSet& s, std::int64_t label,
                        const DimensionReport& pr, const DimensionReport& tnn, const ToyConfig& t,
                        std::uint64_t seed) {
  for (const DimensionReport* r : {&pr, &tnn}) {
    csv.row(set, "final", to_string(r->estimator), label, r->n_samples, r->estimate, r->is_lower_bound);
    const auto grid = scaling_grid(t, s.size());
    for (const ScalingPoint& p : scaling_curve(s.points, r->estimator, grid, seed))
      csv.row(set, "scaling", to_string(r->estimator), label, p.n, p.estimate, "");
  }
}

void write_metadata(const fs::path& path, const ExperimentConfig& cfg, const std::string& hash, json extra) {
  json j = {{"tag", cfg.tag}, {"config_hash", hash}, {"rng", std::string(Rng::kAlgorithm)}};
  j.update(extra);
  write_file(path, j.dump(2) + "\n");
}

}  // namespace

std::vector<std::string> toy_model_names(const ToyConfig& t) {
  std::vector<std::string> names = {"standard"};
  for (double e : t.adversarial_epsilons) names.push_back(eps_name(e));
  return names;
}

ToyPipelineResult cmd_toy_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  const ToyConfig& t = cfg.toy;
  const fs::path dir = cfg.output_dir / "toy";
  ensure_dir(dir);
  ToyPipelineResult res;
  res.config_hash = config_hash(cfg);
  const std::string& hash = res.config_hash;
  const std::string started = utc_now();
  write_file(dir / "config.json", config_to_json(cfg) + "\n");
  write_metadata(dir / "metadata.json", cfg, hash, {{"started_utc", started}, {"status", "running"}});

  std::string current = "data";
  try {
    const SynthDataset ds = stage("data", [&] {
      return synth_dataset(t.ambient_dim, t.n_classes, t.intrinsic_dim, t.n_per_class, t.noise_sigma, t.data_seed,
                           t.geometry);
    });
    const LabeledData test = stage("data", [&] {
      return draw_points(ds.patches, t.n_test_per_class, t.noise_sigma, Rng::derive(t.data_seed, 2));
    });

    SampleSet data_target = ds.class_samples(t.target_class);
    data_target.meta.seed = t.data_seed;
    write_sample_set(dir / ("data_class" + std::to_string(t.target_class) + ".pmgs"), data_target);
    {
      current = "data dimension";
      Csv dim(hash, "set,kind,estimator,label,n,estimate,lower_bound");
      stage(current, [&] {
        res.data_pr = pr_of_samples(data_target, t.data_seed);
        res.data_two_nn = two_nn(data_target);
        add_dimension_rows(dim, "data", data_target, t.target_class, res.data_pr, res.data_two_nn, t, t.data_seed);
      });
      dim.save(dir / "dimension_data.csv");
    }

    Csv summary(hash,
                "model,adversarial_epsilon,clean_accuracy,robust_accuracy,attack_epsilon,data_pr,pm_pr,"
                "pm_pr_lower_bound,pm_two_nn,pm_samples,pm_success_rate,low_yield,pm_data_pr_ratio,"
                "mean_class_pm_pr,mean_dist_noise,mean_dist_data,target_dist_noise,target_dist_data");
    Csv classes(hash,
                "model,class,pm_pr,pm_successes,pm_attempts,dist_noise_mean,dist_noise_std,dist_noise_successes,"
                "dist_data_mean,dist_data_std,dist_data_successes");

    const auto names = toy_model_names(t);
    std::vector<double> epsilons = {0.0};
    epsilons.insert(epsilons.end(), t.adversarial_epsilons.begin(), t.adversarial_epsilons.end());
    std::vector<Eigen::Index> dims = {t.ambient_dim};
    dims.insert(dims.end(), t.hidden.begin(), t.hidden.end());
    dims.push_back(t.n_classes);

    for (std::size_t mi = 0; mi < names.size(); ++mi) {
      const std::string& name = names[mi];
      ToyModelReport rep;
      rep.name = name;
      rep.adversarial_epsilon = epsilons[mi];

      current = "train " + name;
      TrainConfig tc = t.train;
      if (rep.adversarial_epsilon > 0.0)
        tc.adversarial = AdversarialTraining{rep.adversarial_epsilon, t.adversarial_steps,
                                             rep.adversarial_epsilon * t.adversarial_step_fraction};
      const MlpModel model =
          stage(current, [&] { return train(MlpModel::random(dims, t.activation, t.model_seed), ds.data, tc).model; });
      write_model(dir / ("model_" + name + ".pmgm"), model);

      current = "attack " + name;
      const RobustAccuracyReport ra =
          stage(current, [&] { return robust_accuracy(model, test.points, test.labels, t.attack); });
      rep.clean_accuracy = ra.clean_accuracy;
      rep.robust_accuracy = ra.robust_accuracy;
      {
        Csv csv(hash, attack_csv_header());
        for (const AttackRecord& r : ra.records) csv.line(attack_csv_row(r));
        csv.save(dir / ("attack_" + name + ".csv"));
      }

      PmDistanceStats target_noise, target_data;
      for (int c = 0; c < t.n_classes; ++c) {
        current = "sample " + name + " class " + std::to_string(c);
        const bool is_target = c == t.target_class;
        const Eigen::Index n_runs = is_target ? std::max(t.n_pm_samples, t.n_pm_samples_per_class)
                                              : t.n_pm_samples_per_class;
        const PmSampling pm = stage(current, [&] {
          return sample_pm(model, c, n_runs, t.pga, Rng::derive(t.sample_seed, static_cast<std::uint64_t>(c)));
        });
        // Runs are seeded by index, so the first n_pm_samples_per_class runs
        // of the target class are the same runs any other class gets.
        Eigen::Index class_successes = 0;
        for (Eigen::Index i = 0; i < t.n_pm_samples_per_class; ++i)
          class_successes += pm.runs[static_cast<std::size_t>(i)].success ? 1 : 0;
        // Too few successes for a spectrum: NaN, left out of the class mean.
        const double class_pr = class_successes < 2 ? std::numeric_limits<double>::quiet_NaN() : stage(current, [&] {
          return pr_of_samples(prefix_rows(pm.samples.points, class_successes), t.sample_seed).estimate;
        });
        rep.class_pm_pr.push_back(class_pr);

        if (is_target) {
          Eigen::Index target_successes = 0;
          for (Eigen::Index i = 0; i < t.n_pm_samples; ++i)
            target_successes += pm.runs[static_cast<std::size_t>(i)].success ? 1 : 0;
          if (target_successes < 3)
            throw EmptyResult(current + ": only " + std::to_string(target_successes) + " of " +
                              std::to_string(t.n_pm_samples) + " runs reached the threshold");
          SampleSet target = pm.samples;
          target.points = prefix_rows(pm.samples.points, target_successes);
          target.meta.attempts = static_cast<std::uint64_t>(t.n_pm_samples);
          target.meta.successes = static_cast<std::uint64_t>(target_successes);
          write_sample_set(dir / ("pm_" + name + ".pmgs"), target);
          Csv runs(hash, pga_runs_csv_header());
          for (Eigen::Index i = 0; i < t.n_pm_samples; ++i) runs.line(pga_run_csv_row(pm.runs[static_cast<std::size_t>(i)]));
          runs.save(dir / ("pga_runs_" + name + ".csv"));

          current = "dimension " + name;
          Csv dim(hash, "set,kind,estimator,label,n,estimate,lower_bound");
          stage(current, [&] {
            rep.pm_pr = pr_of_samples(target, t.sample_seed);
            rep.pm_two_nn = two_nn(target);
            add_dimension_rows(dim, name, target, c, rep.pm_pr, rep.pm_two_nn, t, t.sample_seed);
          });
          dim.save(dir / ("dimension_" + name + ".csv"));
          rep.pm_success_rate = static_cast<double>(target_successes) / static_cast<double>(t.n_pm_samples);
          rep.low_yield = rep.pm_success_rate < 0.5;
        }

        current = "distance " + name + " class " + std::to_string(c);
        const auto cu = static_cast<std::uint64_t>(c);
        const SampleSet noise = uniform_inits(t.n_distance_inits, t.ambient_dim, Rng::derive(t.sample_seed, 1000 + cu));
        // Natural inits come from the other classes.
        SampleSet natural = strided_rows(exclude_class(test, c), t.n_distance_inits);
        natural.meta.source = "data";
        // A class no init reaches gets NaN and drops out of the class mean.
        const auto distance = [&](const SampleSet& inits, std::uint64_t stream) {
          return stage(current, [&] {
            try {
              return distance_to_pm(model, c, inits, t.pga, Rng::derive(t.sample_seed, stream));
            } catch (const EmptyResult&) {
              PmDistanceStats none;
              none.mean = none.std = std::numeric_limits<double>::quiet_NaN();
              return none;
            }
          });
        };
        const PmDistanceStats dn = distance(noise, 2000 + cu);
        const PmDistanceStats dd = distance(natural, 3000 + cu);
        rep.class_dist_noise.push_back(dn.mean);
        rep.class_dist_data.push_back(dd.mean);
        classes.row(name, c, class_pr, class_successes, t.n_pm_samples_per_class, dn.mean, dn.std, dn.successes,
                    dd.mean, dd.std, dd.successes);
        if (is_target) {
          target_noise = dn;
          target_data = dd;
        }
      }
      rep.mean_class_pm_pr = mean_of(rep.class_pm_pr);
      rep.mean_dist_noise = mean_of(rep.class_dist_noise);
      rep.mean_dist_data = mean_of(rep.class_dist_data);
      summary.row(name, rep.adversarial_epsilon, rep.clean_accuracy, rep.robust_accuracy, t.attack.epsilon,
                  res.data_pr.estimate, rep.pm_pr.estimate, rep.pm_pr.is_lower_bound, rep.pm_two_nn.estimate,
                  rep.pm_pr.n_samples, rep.pm_success_rate, rep.low_yield, rep.pm_pr.estimate / res.data_pr.estimate,
                  rep.mean_class_pm_pr, rep.mean_dist_noise, rep.mean_dist_data, target_noise.mean, target_data.mean);
      // Rewritten after every model so a later failure keeps the rows so far.
      summary.save(dir / "summary.csv");
      classes.save(dir / "class_stats.csv");
      res.models.push_back(std::move(rep));
    }
  } catch (const Error& e) {
    write_metadata(dir / "metadata.json", cfg, hash,
                   {{"started_utc", started}, {"finished_utc", utc_now()}, {"status", "failed"}, {"stage", current},
                    {"error", e.what()}});
    throw;
  }
  write_metadata(dir / "metadata.json", cfg, hash,
                 {{"started_utc", started}, {"finished_utc", utc_now()}, {"status", "ok"}});
  return res;
}

std::vector<Eigen::Index> fig3_d_grid(const EllipsoidConfig& e) {
  if (!e.d_grid.empty()) return e.d_grid;
  return log_grid(1, e.ambient_dim, 12);
}

namespace {

std::string fig3_svg(const std::vector<MonteCarloDistance>& rows) {
  const double w = 640, h = 420, left = 70, right = 20, top = 20, bottom = 50;
  double xmax = 1, ymax = 1;
  for (const auto& r : rows) {
    xmax = std::max(xmax, static_cast<double>(r.intrinsic_dim));
    ymax = std::max({ymax, r.analytic, r.boundary.mean_sq_dist + 2 * r.boundary.sem, r.surface.mean_sq_dist});
  }
  ymax *= 1.05;
  auto px = [&](double x) { return left + x / xmax * (w - left - right); };
  auto py = [&](double y) { return h - bottom - y / ymax * (h - top - bottom); };
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << w - right << "\" y2=\"" << py(0)
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << left << "\" y2=\"" << top
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmax * i / 4, yv = ymax * i / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << h - bottom + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
       << std::lround(xv) << "</text>\n"
       << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
       << std::lround(yv) << "</text>\n";
  }
  os << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 10
     << "\" font-size=\"12\" text-anchor=\"middle\">manifold dimension d</text>\n"
     << "<text x=\"16\" y=\"" << (top + h - bottom) / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (top + h - bottom) / 2 << ")\">mean squared distance</text>\n";
  os << "<polyline fill=\"none\" stroke=\"red\" stroke-dasharray=\"6 4\" points=\"";
  for (const auto& r : rows) os << px(static_cast<double>(r.intrinsic_dim)) << ',' << py(r.analytic) << ' ';
  os << "\"/>\n";
  for (const auto& r : rows) {
    const double x = px(static_cast<double>(r.intrinsic_dim));
    const double lo = r.boundary.mean_sq_dist - 2 * r.boundary.sem, hi = r.boundary.mean_sq_dist + 2 * r.boundary.sem;
    os << "<line x1=\"" << x << "\" y1=\"" << py(lo) << "\" x2=\"" << x << "\" y2=\"" << py(hi)
       << "\" stroke=\"navy\"/>\n"
       << "<circle cx=\"" << x << "\" cy=\"" << py(r.boundary.mean_sq_dist) << "\" r=\"3\" fill=\"navy\"/>\n"
       << "<circle cx=\"" << x << "\" cy=\"" << py(r.surface.mean_sq_dist)
       << "\" r=\"3\" fill=\"none\" stroke=\"gray\"/>\n";
  }
  os << "<text x=\"" << w - right - 200 << "\" y=\"" << top + 14
     << "\" font-size=\"11\" fill=\"red\">theory</text>\n"
     << "<text x=\"" << w - right - 200 << "\" y=\"" << top + 28
     << "\" font-size=\"11\" fill=\"navy\">Monte Carlo (boundary, 2 sigma)</text>\n"
     << "<text x=\"" << w - right - 200 << "\" y=\"" << top + 42
     << "\" font-size=\"11\" fill=\"gray\">Monte Carlo (surface only)</text>\n</svg>\n";
  return os.str();
}

}  // namespace

std::vector<MonteCarloDistance> cmd_ellipsoid_fig3(const ExperimentConfig& cfg) {
  cfg.validate();
  const EllipsoidConfig& e = cfg.ellipsoid;
  const fs::path dir = cfg.output_dir / "ellipsoid";
  ensure_dir(dir);
  const std::string hash = config_hash(cfg);
  std::vector<MonteCarloDistance> rows;
  Csv csv(hash, fig3_csv_header());
  for (Eigen::Index d : fig3_d_grid(e)) {
    rows.push_back(stage("ellipsoid d=" + std::to_string(d), [&] {
      return monte_carlo_expected_sqdist(e.ambient_dim, d, e.radius_low, e.radius_high, e.n_points, e.seed);
    }));
    csv.line(fig3_csv_row(rows.back()));
  }
  csv.save(dir / "fig3.csv");
  if (e.svg) write_file(dir / "fig3.svg", fig3_svg(rows));
  return rows;
}

namespace {

Vector clamped_eigenvalues(const Vector& ev) { return ev.cwiseMax(0.0); }

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

SpectralSuiteResult cmd_spectral_suite(const ExperimentConfig& cfg) {
  cfg.validate();
  const SpectralConfig& sc = cfg.spectral;
  const ToyConfig& t = cfg.toy;
  const fs::path in = cfg.output_dir / "toy";
  const fs::path dir = cfg.output_dir / "spectral";

  std::vector<std::pair<std::string, SampleSet>> sets;
  sets.emplace_back("data", read_sample_set(in / ("data_class" + std::to_string(t.target_class) + ".pmgs")));
  for (const std::string& name : toy_model_names(t)) sets.emplace_back(name, read_sample_set(in / ("pm_" + name + ".pmgs")));
  const Eigen::Index D = sets.front().second.dim();
  for (const auto& [name, s] : sets)
    if (s.dim() != D) throw InvalidInput("spectral: sample sets differ in dimension (" + name + ")");
  if (sc.image_channels * sc.image_side * sc.image_side != D)
    throw InvalidInput("spectral: image_channels * image_side^2 must equal the sample dimension " + std::to_string(D));
  ensure_dir(dir);
  const std::string hash = config_hash(cfg);

  SpectralSuiteResult res;
  const EigenDecomposition natural = stage("spectral data", [&] { return sym_eig(covariance(sets.front().second)); });
  res.k = pick_k_for_variance(as_span(clamped_eigenvalues(natural.eigenvalues)), sc.variance_fraction);

  Csv density(hash, "set,bin_lo,bin_hi,density");
  Csv spectra(hash, "set,n_eigenvalues,n_below_floor,log10_span,k_variance");
  Csv align(hash, "set,k,m,score,baseline_mean,baseline_std,baseline_sem,z,normalization");
  Csv psd(hash, "set,k,power");
  Csv slopes(hash, "set,alpha,slope,fit_lo,fit_hi,total_power,n_images");

  auto emit_psd = [&](const std::string& name, const RadialPsd& p, std::size_t n_images) {
    std::ostringstream two;
    two << "# config_hash=" << hash << "\n# k power\n";
    for (std::size_t i = 0; i < p.k.size(); ++i) {
      psd.row(name, p.k[i], p.power[i]);
      two << format_double(p.k[i]) << ' ' << format_double(p.power[i]) << '\n';
    }
    write_file(dir / ("psd_" + name + ".dat"), two.str());
    slopes.row(name, p.alpha, p.slope, p.fit_lo, p.fit_hi, p.total_power, n_images);
  };

  for (const auto& [name, s] : sets) {
    const std::string tag = "spectral " + name;
    SpectralSetReport rep;
    rep.name = name;
    const EigenDecomposition eig = name == "data" ? natural : stage(tag, [&] { return sym_eig(covariance(s)); });
    const Vector ev = clamped_eigenvalues(eig.eigenvalues);
    rep.density = stage(tag, [&] { return spectrum_density(as_span(ev), sc.n_bins); });
    std::ostringstream two;
    two << "# config_hash=" << hash << "\n# log10_eigenvalue density\n";
    for (std::size_t i = 0; i < rep.density.density.size(); ++i) {
      density.row(name, rep.density.bin_edges[i], rep.density.bin_edges[i + 1], rep.density.density[i]);
      two << format_double(0.5 * (rep.density.bin_edges[i] + rep.density.bin_edges[i + 1])) << ' '
          << format_double(rep.density.density[i]) << '\n';
    }
    write_file(dir / ("spectrum_" + name + ".dat"), two.str());
    spectra.row(name, rep.density.n_eigenvalues, rep.density.n_below_floor,
                rep.density.bin_edges.back() - rep.density.bin_edges.front(),
                pick_k_for_variance(as_span(ev), sc.variance_fraction));

    // Same baseline seed for every set: the baselines are shared.
    rep.alignment = stage(tag, [&] {
      return alignment_sweep(natural.eigenvectors, res.k, eig.eigenvectors, sc.baseline_trials, sc.seed);
    });
    for (const AlignmentScore& a : rep.alignment) {
      const double z = a.baseline.std > 0.0 ? (a.score - a.baseline.mean) / a.baseline.std : 0.0;
      align.row(name, a.k, a.m, a.score, a.baseline.mean, a.baseline.std, a.baseline.sem, z, "sum_cos/k");
    }
    const auto images = images_from_samples(s, sc.image_side, sc.image_channels);
    rep.psd = stage(tag, [&] { return radial_psd(images); });
    emit_psd(name, rep.psd, images.size());
    res.sets.push_back(std::move(rep));
  }

  // Controls with known spectra.
  const auto n_ctrl = static_cast<std::size_t>(sc.n_control_images);
  std::vector<RealGrid> white(n_ctrl), pink(n_ctrl);
  {
    Rng rng(Rng::derive(sc.seed, 1));
    for (auto& g : white) {
      g.resize(sc.control_side, sc.control_side);
      for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
    }
    for (std::size_t i = 0; i < n_ctrl; ++i) pink[i] = power_law_field(sc.control_side, 2.0, Rng::derive(Rng::derive(sc.seed, 2), i));
  }
  for (auto& [name, grids] : {std::pair<std::string, std::vector<RealGrid>&>{"control_white", white},
                              std::pair<std::string, std::vector<RealGrid>&>{"control_power2", pink}}) {
    SpectralSetReport rep;
    rep.name = name;
    rep.psd = stage("spectral " + name, [&] { return radial_psd(grids); });
    emit_psd(name, rep.psd, grids.size());
    res.sets.push_back(std::move(rep));
  }

  density.save(dir / "spectrum_density.csv");
  spectra.save(dir / "spectrum_summary.csv");
  align.save(dir / "alignment.csv");
  psd.save(dir / "psd.csv");
  slopes.save(dir / "psd_slopes.csv");
  write_metadata(dir / "metadata.json", cfg, hash,
                 {{"finished_utc", utc_now()},
                  {"k", res.k},
                  {"alignment_normalization",
                   "sum of the min(k, m) principal cosines divided by k; missing cosines count as zero"},
                  {"alignment_z", "(score - baseline_mean) / baseline_std, std across trials"},
                  {"psd_fit_band", "rings 2..side/4, or 2..side/2 when that leaves fewer than two rings"}});
  return res;
}

}  // namespace pmgeo
