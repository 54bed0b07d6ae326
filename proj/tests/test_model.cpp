#include <cmath>

#include "doctest.h"

#include "pmgeo/dimension.hpp"
#include "pmgeo/model.hpp"
#include "pmgeo/numerics.hpp"
#include "pmgeo/rng.hpp"
#include "pmgeo/synth.hpp"

using namespace pmgeo;

TEST_CASE("forward basics") {
  const MlpModel zero = MlpModel::zeros({6, 5, 4});
  const Prediction p = forward(zero, Vector::Constant(6, 0.3));
  for (int k = 0; k < 4; ++k) CHECK(p.probs[k] == doctest::Approx(0.25));

  const MlpModel m = MlpModel::random({6, 8, 3}, Activation::tanh, 1);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Prediction q = forward(m, rng.uniform_vector(6));
    CHECK(std::abs(q.probs.sum() - 1.0) < 1e-9);
    CHECK(q.probs.minCoeff() > 0.0);
  }
  Vector logits(3);
  logits << 1.0, -2.0, 0.5;
  CHECK((softmax(logits) - softmax((logits.array() + 100.0).matrix())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((log_softmax(logits).array().exp().matrix() - softmax(logits)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(forward(m, Vector::Zero(5)), InvalidInput);

  // batch path agrees with the single path
  Matrix batch(6, 4);
  for (int j = 0; j < 4; ++j) batch.col(j) = rng.uniform_vector(6);
  const Matrix lb = forward_logits(m, batch);
  for (int j = 0; j < 4; ++j) CHECK((lb.col(j) - forward(m, batch.col(j)).logits).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("argmax ties go to the lowest index") {
  Vector v(4);
  v << 1, 3, 3, 2;
  CHECK(argmax_lowest(v) == 1);
}

TEST_CASE("gradient closed forms") {
  const MlpModel zero = MlpModel::zeros({5, 3});
  CHECK(grad_logp(zero, Vector::Constant(5, 0.5), 1).cwiseAbs().maxCoeff() == 0.0);

  // softmax-linear: d log p_c / dx = W_c - sum_j p_j W_j
  const MlpModel lin = MlpModel::random({7, 4}, Activation::tanh, 3);
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rng.uniform_vector(7);
    const int c = static_cast<int>(rng.below(4));
    const Vector p = forward(lin, x).probs;
    const Vector want = lin.weights[0].row(c).transpose() - lin.weights[0].transpose() * p;
    CHECK((grad_logp(lin, x, c) - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(finite_diff_check(lin, x, c) <= 1e-7);
  }
}

TEST_CASE("gradient matches finite differences on random MLPs") {
  Rng rng(5);
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const Activation act = t % 2 ? Activation::softplus : Activation::tanh;
    const auto h = static_cast<Eigen::Index>(3 + rng.below(20));
    const MlpModel m = MlpModel::random({12, h, h, 5}, act, 100 + static_cast<std::uint64_t>(t));
    const Vector x = rng.uniform_vector(12);
    worst = std::max(worst, finite_diff_check(m, x, static_cast<int>(rng.below(5))));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("input_grad_ce agrees with -grad log p") {
  const MlpModel m = MlpModel::random({6, 9, 3}, Activation::tanh, 6);
  Rng rng(7);
  Matrix batch(6, 5);
  std::vector<int> labels;
  for (int j = 0; j < 5; ++j) {
    batch.col(j) = rng.uniform_vector(6);
    labels.push_back(j % 3);
  }
  const Matrix g = input_grad_ce(m, batch, labels);
  for (int j = 0; j < 5; ++j) CHECK((g.col(j) + grad_logp(m, batch.col(j), labels[j])).cwiseAbs().maxCoeff() < 1e-12);
}

namespace {

LabeledData two_blobs(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  LabeledData d;
  d.points.resize(2 * n, 4);
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const int y = i < n ? 0 : 1;
    for (int j = 0; j < 4; ++j) d.points(i, j) = rng.uniform(0.0, 0.4) + (j == 0 && y ? 0.5 : 0.0);
    d.labels.push_back(y);
  }
  return d;
}

}  // namespace

TEST_CASE("training") {
  const LabeledData data = two_blobs(300, 8);
  const MlpModel init = MlpModel::random({4, 2}, Activation::tanh, 9);

  TrainConfig none;
  none.epochs = 0;
  const TrainResult same = train(init, data, none);
  CHECK(same.model.weights[0] == init.weights[0]);
  CHECK(same.model.biases[0] == init.biases[0]);

  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 10;
  const TrainResult r = train(init, data, cfg);
  CHECK(accuracy(r.model, data.points, data.labels) >= 0.99);
  CHECK(r.history.epoch_loss.back() < r.history.initial_loss);
  const TrainResult again = train(init, data, cfg);
  CHECK(again.model.weights[0] == r.model.weights[0]);

  TrainConfig adv = cfg;
  adv.adversarial = AdversarialTraining{0.05, 3, 0.02};
  const TrainResult a = train(MlpModel::random({4, 6, 2}, Activation::tanh, 9), data, adv);
  CHECK(a.history.epoch_loss.back() < a.history.initial_loss);

  TrainConfig wild = cfg;
  wild.learning_rate = 1e308;
  CHECK_THROWS_AS(train(MlpModel::random({4, 6, 2}, Activation::tanh, 9), data, wild), TrainingDiverged);

  TrainConfig bad = cfg;
  bad.adversarial = AdversarialTraining{0.6, 3, 0.02};
  CHECK_THROWS_AS(train(init, data, bad), InvalidInput);
  bad = cfg;
  bad.learning_rate = -1;
  CHECK_THROWS_AS(train(init, data, bad), InvalidInput);
}

TEST_CASE("synthetic classes") {
  const SynthDataset clean = synth_dataset(64, 3, 4, 3000, 0.0, 11);
  CHECK(clean.data.points.minCoeff() >= 0.0);
  CHECK(clean.data.points.maxCoeff() <= 1.0);
  for (int c = 0; c < 3; ++c) {
    const SampleSet s = clean.class_samples(c);
    CHECK(s.meta.label == c);
    const double pr = pr_of_samples(s).estimate;
    CHECK(pr >= 3.5);
    CHECK(pr <= 4.5);
    // every point sits on the class's affine patch
    Matrix span(64, 4);
    span.col(0) = clean.patches.patterns[static_cast<std::size_t>(c)].normalized();
    span.rightCols(3) = clean.patches.bases[static_cast<std::size_t>(c)];
    const Matrix q = orthonormalize(span);
    RowMatrix rel = s.points.rowwise() - clean.patches.centers[static_cast<std::size_t>(c)].transpose();
    CHECK((rel - rel * q * q.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }

  // The default geometry is tuned for sigma 0.005; at sigma 0.02 use wider, equal-variance directions so the
  // noise floor stays small next to the signal.
  SynthGeometry wide;
  wide.contrast_hi = 0.5;
  wide.patch_half_width = 0.45;
  const SynthDataset noisy = synth_dataset(64, 3, 4, 5000, 0.02, 12, wide);
  for (int c = 0; c < 3; ++c) {
    const double pr = pr_of_samples(noisy.class_samples(c)).estimate;
    CHECK(pr >= 0.8 * 4);
    CHECK(pr <= 1.2 * 4);
  }

  const SynthDataset line = synth_dataset(64, 3, 1, 3000, 0.0, 13);
  CHECK(std::abs(two_nn(line.class_samples(0)).estimate - 1.0) <= 0.15);

  CHECK_THROWS_AS(synth_dataset(64, 1, 4, 10, 0.0, 1), InvalidInput);
  CHECK_THROWS_AS(synth_dataset(64, 3, 80, 10, 0.0, 1), InvalidInput);
}

TEST_CASE("patches that would leave the cube are shrunk") {
  SynthGeometry g;
  g.patch_half_width = 5.0;
  const SynthPatches p = make_patches(64, 3, 4, 14, g);
  CHECK(p.shrink_retries > 0);
  for (double h : p.half_widths) CHECK(h < 5.0);
  const LabeledData d = draw_points(p, 500, 0.0, 15);
  CHECK(d.points.minCoeff() >= 0.0);
  CHECK(d.points.maxCoeff() <= 1.0);
}

TEST_CASE("a trained toy classifier separates the classes") {
  SynthGeometry g;
  g.contrast_lo = 0.15;  // no class points near the shared centre
  const SynthDataset ds = synth_dataset(64, 3, 4, 1000, 0.005, 16, g);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 17;
  const TrainResult r = train(MlpModel::random({64, 16, 3}, Activation::tanh, 18), ds.data, cfg);
  CHECK(accuracy(r.model, ds.data.points, ds.data.labels) >= 0.99);
}
