#include "pmgeo/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "json.hpp"
#include "pmgeo/io.hpp"

namespace pmgeo {

using nlohmann::json;

namespace {

// Reads keys of one object, tracking which were consumed so leftovers can
// be reported.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InvalidInput(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.push_back(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw InvalidInput(where_ + "." + key + ": wrong type");
    }
  }

  const json* sub(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.push_back(key);
    return &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw InvalidInput(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

template <class E, class Parse>
void get_enum(Fields& f, const char* key, E& out, Parse parse) {
  std::string s;
  bool present = false;
  if (const json* j = f.sub(key)) {
    if (!j->is_string()) throw InvalidInput(std::string(key) + ": expected a string");
    s = j->get<std::string>();
    present = true;
  }
  if (present) out = parse(s);
}

void read_toy(const json& j, ToyConfig& t) {
  Fields f(j, "toy");
  f.get("ambient_dim", t.ambient_dim);
  f.get("n_classes", t.n_classes);
  f.get("intrinsic_dim", t.intrinsic_dim);
  f.get("n_per_class", t.n_per_class);
  f.get("n_test_per_class", t.n_test_per_class);
  f.get("noise_sigma", t.noise_sigma);
  if (const json* g = f.sub("geometry")) {
    Fields gf(*g, "toy.geometry");
    gf.get("block_width", t.geometry.block_width);
    gf.get("signed_pattern", t.geometry.signed_pattern);
    gf.get("weak_width", t.geometry.weak_width);
    gf.get("contrast_lo", t.geometry.contrast_lo);
    gf.get("contrast_hi", t.geometry.contrast_hi);
    gf.get("weak_offset", t.geometry.weak_offset);
    gf.get("patch_half_width", t.geometry.patch_half_width);
    gf.finish();
  }
  f.get("hidden", t.hidden);
  get_enum(f, "activation", t.activation, activation_from_string);
  if (const json* tr = f.sub("train")) {
    Fields tf(*tr, "toy.train");
    tf.get("epochs", t.train.epochs);
    tf.get("batch_size", t.train.batch_size);
    tf.get("learning_rate", t.train.learning_rate);
    get_enum(tf, "optimizer", t.train.optimizer, optimizer_from_string);
    tf.get("momentum", t.train.momentum);
    tf.get("weight_decay", t.train.weight_decay);
    tf.get("seed", t.train.seed);
    tf.finish();
  }
  f.get("adversarial_epsilons", t.adversarial_epsilons);
  f.get("adversarial_steps", t.adversarial_steps);
  f.get("adversarial_step_fraction", t.adversarial_step_fraction);
  f.get("target_class", t.target_class);
  f.get("n_pm_samples", t.n_pm_samples);
  f.get("n_pm_samples_per_class", t.n_pm_samples_per_class);
  f.get("n_distance_inits", t.n_distance_inits);
  f.get("scaling_grid", t.scaling_grid);
  if (const json* p = f.sub("pga")) {
    Fields pf(*p, "toy.pga");
    pf.get("step_size", t.pga.step_size);
    pf.get("threshold", t.pga.threshold);
    pf.get("max_iters", t.pga.max_iters);
    get_enum(pf, "optimizer", t.pga.optimizer, pga_optimizer_from_string);
    pf.get("noise_sigma", t.pga.noise_sigma);
    pf.get("momentum", t.pga.momentum);
    pf.get("adam_fallback", t.pga.adam_fallback);
    pf.finish();
  }
  if (const json* a = f.sub("attack")) {
    Fields af(*a, "toy.attack");
    af.get("epsilon", t.attack.epsilon);
    af.get("steps", t.attack.steps);
    af.get("step_size", t.attack.step_size);
    af.get("restarts", t.attack.restarts);
    af.get("seed", t.attack.seed);
    af.finish();
  }
  f.get("data_seed", t.data_seed);
  f.get("model_seed", t.model_seed);
  f.get("sample_seed", t.sample_seed);
  f.finish();
}

json write_toy(const ToyConfig& t) {
  const auto& g = t.geometry;
  return json{
      {"ambient_dim", t.ambient_dim},
      {"n_classes", t.n_classes},
      {"intrinsic_dim", t.intrinsic_dim},
      {"n_per_class", t.n_per_class},
      {"n_test_per_class", t.n_test_per_class},
      {"noise_sigma", t.noise_sigma},
      {"geometry",
       {{"block_width", g.block_width},
        {"signed_pattern", g.signed_pattern},
        {"weak_width", g.weak_width},
        {"contrast_lo", g.contrast_lo},
        {"contrast_hi", g.contrast_hi},
        {"weak_offset", g.weak_offset},
        {"patch_half_width", g.patch_half_width}}},
      {"hidden", t.hidden},
      {"activation", to_string(t.activation)},
      {"train",
       {{"epochs", t.train.epochs},
        {"batch_size", t.train.batch_size},
        {"learning_rate", t.train.learning_rate},
        {"optimizer", to_string(t.train.optimizer)},
        {"momentum", t.train.momentum},
        {"weight_decay", t.train.weight_decay},
        {"seed", t.train.seed}}},
      {"adversarial_epsilons", t.adversarial_epsilons},
      {"adversarial_steps", t.adversarial_steps},
      {"adversarial_step_fraction", t.adversarial_step_fraction},
      {"target_class", t.target_class},
      {"n_pm_samples", t.n_pm_samples},
      {"n_pm_samples_per_class", t.n_pm_samples_per_class},
      {"n_distance_inits", t.n_distance_inits},
      {"scaling_grid", t.scaling_grid},
      {"pga",
       {{"step_size", t.pga.step_size},
        {"threshold", t.pga.threshold},
        {"max_iters", t.pga.max_iters},
        {"optimizer", to_string(t.pga.optimizer)},
        {"noise_sigma", t.pga.noise_sigma},
        {"momentum", t.pga.momentum},
        {"adam_fallback", t.pga.adam_fallback}}},
      {"attack",
       {{"epsilon", t.attack.epsilon},
        {"steps", t.attack.steps},
        {"step_size", t.attack.step_size},
        {"restarts", t.attack.restarts},
        {"seed", t.attack.seed}}},
      {"data_seed", t.data_seed},
      {"model_seed", t.model_seed},
      {"sample_seed", t.sample_seed},
  };
}

}  // namespace

void ExperimentConfig::validate() const {
  if (tag.empty()) throw InvalidInput("config: tag must not be empty");
  const ToyConfig& t = toy;
  if (t.n_classes < 2) throw InvalidInput("config: toy.n_classes must be >= 2");
  if (t.target_class < 0 || t.target_class >= t.n_classes) throw InvalidInput("config: toy.target_class out of range");
  if (t.n_pm_samples < 3 || t.n_pm_samples_per_class < 2 || t.n_distance_inits < 1 || t.n_test_per_class < 1 ||
      t.n_per_class < 2)
    throw InvalidInput("config: toy sample counts too small (n_pm_samples >= 3, n_pm_samples_per_class >= 2)");
  for (Eigen::Index n : t.scaling_grid)
    if (n < 3 || n > t.n_pm_samples) throw InvalidInput("config: toy.scaling_grid values must lie in [3, n_pm_samples]");
  for (double e : t.adversarial_epsilons)
    if (!(e > 0.0 && e < 0.5)) throw InvalidInput("config: adversarial epsilons must lie in (0, 0.5)");
  if (t.adversarial_steps < 1 || !(t.adversarial_step_fraction > 0.0))
    throw InvalidInput("config: adversarial steps and step fraction must be positive");
  for (Eigen::Index h : t.hidden)
    if (h < 1) throw InvalidInput("config: hidden widths must be positive");
  t.train.validate();
  t.pga.validate();
  t.attack.validate();
  const EllipsoidConfig& e = ellipsoid;
  if (e.ambient_dim < 1 || !(e.radius_low > 0.0 && e.radius_low <= e.radius_high) || e.n_points < 2)
    throw InvalidInput("config: bad ellipsoid block");
  for (Eigen::Index d : e.d_grid)
    if (d < 1 || d > e.ambient_dim) throw InvalidInput("config: ellipsoid.d_grid values must lie in [1, D]");
  const SpectralConfig& s = spectral;
  if (s.n_bins < 1 || !(s.variance_fraction > 0.0 && s.variance_fraction <= 1.0) || s.baseline_trials < 2 ||
      s.image_side < 4 || s.image_channels < 1 || s.n_control_images < 1 || s.control_side < 8)
    throw InvalidInput("config: bad spectral block");
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  Fields f(j, "config");
  f.get("tag", cfg.tag);
  std::string out = cfg.output_dir.string();
  f.get("output_dir", out);
  cfg.output_dir = out;
  if (const json* t = f.sub("toy")) read_toy(*t, cfg.toy);
  if (const json* e = f.sub("ellipsoid")) {
    Fields ef(*e, "ellipsoid");
    ef.get("ambient_dim", cfg.ellipsoid.ambient_dim);
    ef.get("radius_low", cfg.ellipsoid.radius_low);
    ef.get("radius_high", cfg.ellipsoid.radius_high);
    ef.get("d_grid", cfg.ellipsoid.d_grid);
    ef.get("n_points", cfg.ellipsoid.n_points);
    ef.get("seed", cfg.ellipsoid.seed);
    ef.get("svg", cfg.ellipsoid.svg);
    ef.finish();
  }
  if (const json* s = f.sub("spectral")) {
    Fields sf(*s, "spectral");
    sf.get("n_bins", cfg.spectral.n_bins);
    sf.get("variance_fraction", cfg.spectral.variance_fraction);
    sf.get("baseline_trials", cfg.spectral.baseline_trials);
    sf.get("image_side", cfg.spectral.image_side);
    sf.get("image_channels", cfg.spectral.image_channels);
    sf.get("n_control_images", cfg.spectral.n_control_images);
    sf.get("control_side", cfg.spectral.control_side);
    sf.get("seed", cfg.spectral.seed);
    sf.finish();
  }
  f.finish();
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const auto& e = cfg.ellipsoid;
  const auto& s = cfg.spectral;
  json j{
      {"tag", cfg.tag},
      {"output_dir", cfg.output_dir.string()},
      {"toy", write_toy(cfg.toy)},
      {"ellipsoid",
       {{"ambient_dim", e.ambient_dim},
        {"radius_low", e.radius_low},
        {"radius_high", e.radius_high},
        {"d_grid", e.d_grid},
        {"n_points", e.n_points},
        {"seed", e.seed},
        {"svg", e.svg}}},
      {"spectral",
       {{"n_bins", s.n_bins},
        {"variance_fraction", s.variance_fraction},
        {"baseline_trials", s.baseline_trials},
        {"image_side", s.image_side},
        {"image_channels", s.image_channels},
        {"n_control_images", s.n_control_images},
        {"control_side", s.control_side},
        {"seed", s.seed}}},
  };
  return j.dump(2);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = config_from_json(read_file(path));
  if (const char* dir = std::getenv("PMGEO_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // The output directory does not change results, so it stays out of the hash.
  ExperimentConfig c = cfg;
  c.output_dir = "";
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc32(config_to_json(c)));
  return buf;
}

}  // namespace pmgeo
