#include <cmath>

#include "doctest.h"

#include "fixtures.hpp"
#include "pmgeo/rng.hpp"
#include "pmgeo/sampler.hpp"

using namespace pmgeo;

namespace {

PgaConfig no_fallback() {
  PgaConfig cfg;
  cfg.adam_fallback = false;
  return cfg;
}

}  // namespace

TEST_CASE("init already on the manifold") {
  const MlpModel& m = fixture::standard_model();
  // a confidently classified training point
  const LabeledData& d = fixture::toy_data().data;
  Eigen::Index row = 0;
  while (forward(m, d.points.row(row).transpose()).probs[d.labels[row]] <= 0.9) ++row;
  const Vector x = d.points.row(row).transpose();
  const PmSampleResult r = pga_sample(m, d.labels[row], PgaConfig{}, x, 1);
  CHECK(r.success);
  CHECK(r.iterations == 0);
  CHECK(r.sq_dist_from_init == 0.0);
  CHECK(r.x_final == x);

  SampleSet inits;
  inits.points = d.points.row(row);
  const PmDistanceStats s = distance_to_pm(m, d.labels[row], inits, PgaConfig{}, 2);
  CHECK(s.mean == 0.0);
  CHECK(s.successes == 1);
}

TEST_CASE("zero model never reaches the threshold") {
  const MlpModel zero = MlpModel::zeros({8, 3});
  PgaConfig cfg;
  cfg.max_iters = 50;
  const PmSampleResult r = pga_sample(zero, 1, cfg, 3);
  CHECK_FALSE(r.success);
  CHECK(r.used_fallback);
  CHECK(r.final_prob == doctest::Approx(1.0 / 3));

  const PmSampling pm = sample_pm(zero, 0, 4, cfg, 4);
  CHECK(pm.samples.size() == 0);
  CHECK(pm.samples.meta.attempts == 4);
  CHECK(pm.samples.meta.successes == 0);
  CHECK(pm.low_yield);

  SampleSet inits;
  inits.points = RowMatrix::Constant(3, 8, 0.5);
  CHECK_THROWS_AS(distance_to_pm(zero, 0, inits, cfg, 5), EmptyResult);
}

TEST_CASE("trained toy model: success rate and run contracts") {
  const MlpModel& m = fixture::standard_model();
  const PgaConfig cfg;
  const PmSampling pm = sample_pm(m, 1, 1000, cfg, 6);
  CHECK(pm.samples.meta.successes >= 950);
  CHECK_FALSE(pm.low_yield);
  CHECK(pm.samples.meta.source == "pm");
  CHECK(pm.samples.meta.label == 1);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < pm.runs.size(); ++i) {
    const PmSampleResult& r = pm.runs[i];
    CHECK(r.x_final.minCoeff() >= 0.0);
    CHECK(r.x_final.maxCoeff() <= 1.0);
    const Vector init = Rng(Rng::derive(6, i)).uniform_vector(64);
    CHECK(r.sq_dist_from_init == doctest::Approx((r.x_final - init).squaredNorm()).epsilon(1e-12));
    if (r.success) {
      CHECK(forward(m, r.x_final).probs[1] > cfg.threshold);
      CHECK(pm.samples.points.row(row++) == r.x_final.transpose());
    }
  }
  CHECK(row == pm.samples.size());
}

TEST_CASE("ascent stops at the first crossing") {
  const MlpModel& m = fixture::standard_model();
  const PgaConfig cfg = no_fallback();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PmSampleResult r = pga_sample(m, 2, cfg, 100 + s);
    REQUIRE(r.success);
    if (r.iterations == 0) continue;
    PgaConfig shorter = cfg;
    shorter.max_iters = r.iterations - 1;
    const PmSampleResult cut = pga_sample(m, 2, shorter, 100 + s);
    CHECK_FALSE(cut.success);
    CHECK(cut.final_prob <= cfg.threshold);
  }
}

TEST_CASE("sampling is deterministic") {
  const MlpModel& m = fixture::standard_model();
  PgaConfig cfg;
  cfg.noise_sigma = 0.01;
  cfg.momentum = 0.5;
  const PmSampling a = sample_pm(m, 0, 50, cfg, 7);
  const PmSampling b = sample_pm(m, 0, 50, cfg, 7);
  CHECK(a.samples.points == b.samples.points);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].iterations == b.runs[i].iterations);
    CHECK(a.runs[i].sq_dist_from_init == b.runs[i].sq_dist_from_init);
  }
  // n = 1 is a single run with the first derived seed
  const PmSampling one = sample_pm(m, 0, 1, cfg, 8);
  const PmSampleResult single = pga_sample(m, 0, cfg, Rng::derive(8, 0));
  CHECK(one.runs[0].x_final == single.x_final);
}

TEST_CASE("adam ascent also lands on the manifold") {
  const MlpModel& m = fixture::standard_model();
  PgaConfig cfg;
  cfg.optimizer = PgaOptimizer::adam;
  cfg.step_size = 0.005;
  const PmSampleResult r = pga_sample(m, 0, cfg, 9);
  CHECK(r.success);
  CHECK(forward(m, r.x_final).probs[0] > 0.9);
}

TEST_CASE("non-finite gradient is reported with a snapshot") {
  MlpModel m = MlpModel::zeros({4, 2});
  m.weights[0].row(0).setConstant(1e308);
  m.weights[0].row(1).setConstant(-1e308);
  try {
    pga_sample(m, 1, no_fallback(), Vector::Constant(4, 0.9), 10);
    FAIL("expected NumericalFailure");
  } catch (const NumericalFailure& e) {
    CHECK(e.snapshot().size() == 4);
  }
}

TEST_CASE("config validation") {
  PgaConfig cfg;
  cfg.threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.step_size = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  CHECK(pga_optimizer_from_string(to_string(PgaOptimizer::adam)) == PgaOptimizer::adam);
  CHECK(pga_runs_csv_header() == "seed,iterations,success,sq_dist,final_prob,fallback");
}
