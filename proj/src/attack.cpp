#include "pmgeo/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pmgeo/parallel.hpp"

namespace pmgeo {

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || epsilon >= 0.5) throw InvalidInput("attack: epsilon must be in [0, 0.5)");
  if (steps < 0) throw InvalidInput("attack: steps must be >= 0");
  if (restarts < 1) throw InvalidInput("attack: restarts must be >= 1");
  if (epsilon > 0.0 && (!(step_size > 0.0) || step_size > epsilon))
    throw InvalidInput("attack: step_size must be in (0, epsilon]");
}

namespace {

// Projection onto the L-infinity ball around x intersected with [0,1]^D.
void project(Vector& xp, const Vector& x, double eps) {
  xp = xp.array().max(x.array() - eps).min(x.array() + eps).max(0.0).min(1.0).matrix();
  // x +- eps can round so that |xp - x| exceeds eps by an ulp; step back toward x.
  for (Eigen::Index i = 0; i < xp.size(); ++i) {
    while (xp[i] - x[i] > eps) xp[i] = std::nextafter(xp[i], x[i]);
    while (x[i] - xp[i] > eps) xp[i] = std::nextafter(xp[i], x[i]);
  }
}

double margin_of(const Vector& logits, int label) {
  double other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    if (i != label) other = std::max(other, logits[i]);
  return logits[label] - other;
}

}  // namespace

std::optional<AttackOutcome> pgd_attack(const MlpModel& model, const Vector& x, int label, const AttackConfig& cfg) {
  cfg.validate();
  if (x.size() != model.input_dim()) throw InvalidInput("pgd_attack: dimension mismatch");
  if ((x.array() < 0.0).any() || (x.array() > 1.0).any()) throw InvalidInput("pgd_attack: x must lie in [0,1]^D");
  if (label < 0 || label >= model.n_classes()) throw InvalidInput("pgd_attack: label out of range");
  if (cfg.target && (*cfg.target < 0 || *cfg.target >= model.n_classes()))
    throw InvalidInput("pgd_attack: target out of range");

  auto succeeded = [&](const Vector& logits) {
    const int pred = argmax_lowest(logits);
    return cfg.target ? pred == *cfg.target : pred != label;
  };
  auto outcome = [&](const Vector& xp, const Vector& logits, int it, int restart) {
    return AttackOutcome{xp, it, restart, argmax_lowest(logits), margin_of(logits, label)};
  };

  for (int r = 0; r < cfg.restarts; ++r) {
    Vector xp = x;
    if (r > 0) {
      Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
      for (Eigen::Index i = 0; i < xp.size(); ++i) xp[i] += rng.uniform(-cfg.epsilon, cfg.epsilon);
      project(xp, x, cfg.epsilon);
    }
    Vector logits = forward(model, xp).logits;
    if (succeeded(logits)) return outcome(xp, logits, 0, r);
    if (cfg.epsilon == 0.0) continue;
    for (int it = 1; it <= cfg.steps; ++it) {
      // Untargeted: ascend CE = descend log p(label). Targeted: ascend log p(target).
      const Vector g = cfg.target ? grad_logp(model, xp, *cfg.target) : Vector(-grad_logp(model, xp, label));
      xp += cfg.step_size * g.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
      project(xp, x, cfg.epsilon);
      logits = forward(model, xp).logits;
      if (succeeded(logits)) return outcome(xp, logits, it, r);
    }
  }
  return std::nullopt;
}

RobustAccuracyReport robust_accuracy(const MlpModel& model, const RowMatrix& points, std::span<const int> labels,
                                     const AttackConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = points.rows();
  if (n == 0) throw InvalidInput("robust_accuracy: empty dataset");
  if (static_cast<Eigen::Index>(labels.size()) != n) throw InvalidInput("robust_accuracy: label count mismatch");

  RobustAccuracyReport report;
  report.records.resize(static_cast<std::size_t>(n));
  parallel_for(n, [&](Eigen::Index i) {
    AttackRecord& rec = report.records[static_cast<std::size_t>(i)];
    rec.index = i;
    const Vector x = points.row(i).transpose();
    const int label = labels[static_cast<std::size_t>(i)];
    const Vector logits = forward(model, x).logits;
    rec.clean_correct = argmax_lowest(logits) == label;
    rec.margin = margin_of(logits, label);
    if (!rec.clean_correct) return;
    AttackConfig point_cfg = cfg;
    point_cfg.seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(i));
    if (auto adv = pgd_attack(model, x, label, point_cfg)) {
      rec.attack_success = true;
      rec.iterations = adv->iterations;
      rec.margin = adv->margin;
    } else {
      rec.iterations = cfg.steps * cfg.restarts;
    }
  });
  std::size_t clean = 0, robust = 0;
  for (const auto& r : report.records) {
    clean += r.clean_correct ? 1 : 0;
    robust += (r.clean_correct && !r.attack_success) ? 1 : 0;
  }
  report.clean_accuracy = static_cast<double>(clean) / static_cast<double>(n);
  report.robust_accuracy = static_cast<double>(robust) / static_cast<double>(n);
  return report;
}

Matrix linf_pgd_batch(const MlpModel& model, const Matrix& batch, std::span<const int> labels, double epsilon,
                      int steps, double step_size, Rng& rng) {
  Matrix xp = batch;
  for (Eigen::Index j = 0; j < xp.cols(); ++j)
    for (Eigen::Index i = 0; i < xp.rows(); ++i) xp(i, j) += rng.uniform(-epsilon, epsilon);
  auto clamp_all = [&] {
    xp = xp.cwiseMax((batch.array() - epsilon).matrix()).cwiseMin((batch.array() + epsilon).matrix());
    xp = xp.cwiseMax(0.0).cwiseMin(1.0);
  };
  clamp_all();
  for (int s = 0; s < steps; ++s) {
    const Matrix g = input_grad_ce(model, xp, labels);
    xp += step_size * g.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
    clamp_all();
  }
  return xp;
}

std::string attack_csv_header() { return "index,clean_correct,attack_success,iterations,margin"; }

std::string attack_csv_row(const AttackRecord& r) {
  std::ostringstream os;
  os.precision(12);
  os << r.index << ',' << (r.clean_correct ? 1 : 0) << ',' << (r.attack_success ? 1 : 0) << ',' << r.iterations << ','
     << r.margin;
  return os.str();
}

}  // namespace pmgeo
