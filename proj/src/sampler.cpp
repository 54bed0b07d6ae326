#include "pmgeo/sampler.hpp"

#include <cmath>
#include <sstream>

#include "pmgeo/parallel.hpp"
#include "pmgeo/rng.hpp"

namespace pmgeo {

std::string to_string(PgaOptimizer o) { return o == PgaOptimizer::plain ? "plain" : "adam"; }

PgaOptimizer pga_optimizer_from_string(const std::string& s) {
  if (s == "plain") return PgaOptimizer::plain;
  if (s == "adam") return PgaOptimizer::adam;
  throw InvalidInput("unknown PGA optimizer: " + s);
}

void PgaConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidInput("PGA step_size must be > 0");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("PGA threshold must lie in (0,1)");
  if (max_iters < 0) throw InvalidInput("PGA max_iters must be >= 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidInput("PGA noise_sigma must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("PGA momentum must lie in [0,1)");
}

namespace {

PmSampleResult ascend(const MlpModel& model, int c, const PgaConfig& cfg, PgaOptimizer opt, const Vector& init,
                      std::uint64_t seed) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  Rng rng(seed);
  Vector x = init;
  Vector m = Vector::Zero(x.size());
  Vector v = Vector::Zero(x.size());
  PmSampleResult r;
  r.seed = seed;
  for (int t = 0;; ++t) {
    const LogProbGradient lg = logp_and_grad(model, x, c);
    if (!lg.gradient.allFinite() || !std::isfinite(lg.log_prob))
      throw NumericalFailure("PGA: non-finite gradient at iteration " + std::to_string(t), 0.0,
                             std::vector<double>(x.data(), x.data() + x.size()));
    const double p = lg.probs[c];
    if (p > cfg.threshold || t == cfg.max_iters) {
      r.success = p > cfg.threshold;
      r.iterations = t;
      r.final_prob = p;
      break;
    }
    Vector step;
    if (opt == PgaOptimizer::adam) {
      m = kBeta1 * m + (1.0 - kBeta1) * lg.gradient;
      v = kBeta2 * v + (1.0 - kBeta2) * lg.gradient.cwiseProduct(lg.gradient);
      const double b1 = 1.0 - std::pow(kBeta1, t + 1), b2 = 1.0 - std::pow(kBeta2, t + 1);
      step = cfg.step_size * ((m / b1).array() / ((v / b2).array().sqrt() + kAdamEps)).matrix();
    } else {
      m = cfg.momentum * m + lg.gradient;
      step = cfg.step_size * m;
    }
    x += step;
    if (cfg.noise_sigma > 0.0)
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += cfg.noise_sigma * rng.normal();
    x = x.cwiseMax(0.0).cwiseMin(1.0);
  }
  r.sq_dist_from_init = (x - init).squaredNorm();
  r.x_final = std::move(x);
  return r;
}

}  // namespace

PmSampleResult pga_sample(const MlpModel& model, int c, const PgaConfig& cfg, const Vector& init, std::uint64_t seed) {
  cfg.validate();
  if (init.size() != model.input_dim()) throw InvalidInput("pga_sample: init has wrong dimension");
  if (c < 0 || c >= model.n_classes()) throw InvalidInput("pga_sample: class out of range");
  if (!init.allFinite() || init.minCoeff() < 0.0 || init.maxCoeff() > 1.0)
    throw InvalidInput("pga_sample: init outside [0,1]^D");
  PmSampleResult r = ascend(model, c, cfg, cfg.optimizer, init, seed);
  if (!r.success && cfg.optimizer == PgaOptimizer::plain && cfg.adam_fallback && cfg.max_iters > 0) {
    r = ascend(model, c, cfg, PgaOptimizer::adam, init, Rng::derive(seed, 1));
    r.used_fallback = true;
    r.seed = seed;
  }
  return r;
}

PmSampleResult pga_sample(const MlpModel& model, int c, const PgaConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const Vector init = rng.uniform_vector(model.input_dim());
  return pga_sample(model, c, cfg, init, Rng::derive(seed, 0));
}

PmSampling sample_pm(const MlpModel& model, int c, Eigen::Index n_samples, const PgaConfig& cfg, std::uint64_t seed) {
  if (n_samples < 1) throw InvalidInput("sample_pm: n_samples must be >= 1");
  cfg.validate();
  PmSampling out;
  out.runs.resize(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, [&](std::ptrdiff_t i) {
    out.runs[static_cast<std::size_t>(i)] = pga_sample(model, c, cfg, Rng::derive(seed, static_cast<std::uint64_t>(i)));
  });
  std::size_t ok = 0;
  for (const auto& r : out.runs) ok += r.success;
  out.samples.points.resize(static_cast<Eigen::Index>(ok), model.input_dim());
  Eigen::Index row = 0;
  for (const auto& r : out.runs)
    if (r.success) out.samples.points.row(row++) = r.x_final.transpose();
  out.samples.meta.seed = seed;
  out.samples.meta.source = "pm";
  out.samples.meta.label = c;
  out.samples.meta.attempts = static_cast<std::uint64_t>(n_samples);
  out.samples.meta.successes = ok;
  out.low_yield = 2 * ok < static_cast<std::size_t>(n_samples);
  return out;
}

PmDistanceStats distance_to_pm(const MlpModel& model, int c, const SampleSet& inits, const PgaConfig& cfg,
                               std::uint64_t seed) {
  cfg.validate();
  const Eigen::Index n = inits.size();
  std::vector<PmSampleResult> runs(static_cast<std::size_t>(n));
  parallel_for(n, [&](std::ptrdiff_t i) {
    const Vector init = inits.points.row(i).transpose();
    runs[static_cast<std::size_t>(i)] = pga_sample(model, c, cfg, init, Rng::derive(seed, static_cast<std::uint64_t>(i)));
  });
  PmDistanceStats s;
  s.source = inits.meta.source;
  s.attempts = runs.size();
  CompensatedMoments mom;
  for (const auto& r : runs) {
    if (!r.success) continue;
    s.sq_distances.push_back(r.sq_dist_from_init);
    mom.add(r.sq_dist_from_init);
  }
  s.successes = s.sq_distances.size();
  if (s.successes == 0) throw EmptyResult("distance_to_pm: no run reached the manifold");
  s.mean = mom.mean();
  s.std = s.successes > 1 ? mom.stddev() : 0.0;
  return s;
}

std::string pga_runs_csv_header() { return "seed,iterations,success,sq_dist,final_prob,fallback"; }

std::string pga_run_csv_row(const PmSampleResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.seed << ',' << r.iterations << ',' << (r.success ? 1 : 0) << ',' << r.sq_dist_from_init << ','
     << r.final_prob << ',' << (r.used_fallback ? 1 : 0);
  return os.str();
}

}  // namespace pmgeo
