#ifndef NNEVP_CONFIG_HPP
#define NNEVP_CONFIG_HPP

/**
 * @file config.hpp
 *
 * Run configuration: a JSON file validated in full before any computation.
 * Unknown keys are rejected so a typo never silently falls back to a
 * default. See configs/ for annotated examples.
 */

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnevp/io.hpp"
#include "nnevp/networks.hpp"
#include "nnevp/reference_models.hpp"
#include "nnevp/solver.hpp"
#include "nnevp/trainer.hpp"

namespace nnevp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReferenceModel { PowerLaw, JohnsonCook, HallPetch };

struct ReferenceConfig {
  ReferenceModel model = ReferenceModel::PowerLaw;
  std::vector<double> n{10.0};
  std::optional<double> eps_dot_0;  // default: reference_rate(loading, rate_norm)
  RateNorm rate_norm = RateNorm::Effective;
  double sigma_y = 100.0;
  std::vector<double> rates;  // default: loading rate only
  JohnsonCookParams johnson_cook{};
  HallPetchParams hall_petch{};
  std::vector<double> grains_um{2.1, 3.4, 7.1, 15.0};
  double friction_mpa = 0.0;  // grain-independent part of the initial yield
};

struct ModelConfig {
  Experiment experiment = Experiment::Perfect;
  ArchitectureSpec arch{};
  std::optional<double> rate_scale;    // default: applied strain rate
  std::optional<double> stress_scale;  // default: largest data stress
  double strain_scale = 0.01;
  std::optional<double> grain_scale;  // default: smallest training grain
};

struct ExtrapolateConfig {
  std::optional<std::filesystem::path> parameters;  // default: <output_dir>/parameters.json
  double target_strain = 0.02;
  std::optional<int> steps;  // default: keep the training step size
  std::optional<double> training_strain;  // default: loading.target_strain
  std::vector<double> grains_um;  // default: training grains
  bool compare_reference = true;
};

struct DiscoverConfig {
  std::optional<std::filesystem::path> parameters;
  std::vector<double> grains_um = default_hall_petch_grid();
};

struct RunConfig {
  std::filesystem::path source;  // the config file, for relative paths
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";
  ElasticParams elastic{};
  LoadingProgram loading{};
  std::optional<ReferenceConfig> reference;
  std::optional<std::filesystem::path> manifest;
  ModelConfig model{};
  TrainConfig training{};
  ExtrapolateConfig extrapolate{};
  DiscoverConfig discover{};

  /// Path relative to the config file's directory unless absolute.
  std::filesystem::path resolve(const std::filesystem::path& p) const {
    if (p.is_absolute() || source.empty()) return p;
    return source.parent_path() / p;
  }

  void validate() const;
  json echo() const;
};

namespace detail {

/// Reads members of one JSON object and rejects the ones never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    if (!has(key)) return fallback;
    return as<T>(key);
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as<T>(key);
  }

  template <class T>
  T as(const std::string& key) {
    seen_.insert(key);
    try {
      const json& v = j_.at(key);
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path(key) + " must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path(key) + " must be a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + path(k) + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline Stepping stepping_from_string(const std::string& s) {
  if (s == "fixed") return Stepping::Fixed;
  if (s == "geometric") return Stepping::Geometric;
  throw ConfigError("loading.stepping must be fixed or geometric, not '" + s + "'");
}

inline LoadingMode mode_from_string(const std::string& s) {
  if (s == "true-uniaxial") return LoadingMode::TrueUniaxial;
  if (s == "prescribed-lateral") return LoadingMode::PrescribedLateral;
  throw ConfigError("loading.mode must be true-uniaxial or prescribed-lateral, not '" + s + "'");
}

inline std::string to_string(Stepping s) { return s == Stepping::Fixed ? "fixed" : "geometric"; }
inline std::string to_string(LoadingMode m) {
  return m == LoadingMode::TrueUniaxial ? "true-uniaxial" : "prescribed-lateral";
}
inline std::string to_string(RateNorm r) { return r == RateNorm::Effective ? "effective" : "frobenius"; }
inline std::string to_string(ReferenceModel m) {
  switch (m) {
    case ReferenceModel::PowerLaw: return "power-law";
    case ReferenceModel::JohnsonCook: return "johnson-cook";
    case ReferenceModel::HallPetch: return "hall-petch";
  }
  return "unknown";
}

}  // namespace detail

inline RunConfig parse_config(const json& root, const std::filesystem::path& source = {}) {
  using detail::ObjectReader;
  RunConfig c;
  c.source = source;
  ObjectReader top(root, "config");
  c.seed = top.get<std::uint64_t>("seed", c.seed);
  c.output_dir = top.get<std::string>("output_dir", c.output_dir.string());

  if (top.has("elastic")) {
    ObjectReader r(top.child("elastic"), "elastic");
    c.elastic.E = r.get("E", c.elastic.E);
    c.elastic.nu = r.get("nu", c.elastic.nu);
    r.finish();
  }
  if (top.has("loading")) {
    ObjectReader r(top.child("loading"), "loading");
    c.loading.strain_rate = r.get("strain_rate", c.loading.strain_rate);
    c.loading.target_strain = r.get("target_strain", c.loading.target_strain);
    c.loading.stepping = detail::stepping_from_string(r.get<std::string>("stepping", "fixed"));
    c.loading.steps = r.get("steps", c.loading.steps);
    c.loading.growth = r.get("growth", c.loading.growth);
    c.loading.mode = detail::mode_from_string(r.get<std::string>("mode", "true-uniaxial"));
    r.finish();
  }
  if (top.has("reference")) {
    ObjectReader r(top.child("reference"), "reference");
    ReferenceConfig ref;
    const std::string model = r.get<std::string>("model", "power-law");
    if (model == "power-law") ref.model = ReferenceModel::PowerLaw;
    else if (model == "johnson-cook") ref.model = ReferenceModel::JohnsonCook;
    else if (model == "hall-petch") ref.model = ReferenceModel::HallPetch;
    else throw ConfigError("reference.model must be power-law, johnson-cook or hall-petch, not '" + model + "'");
    if (r.has("n")) {
      const json& n = r.child("n");
      if (n.is_number()) ref.n = {n.get<double>()};
      else if (n.is_array() && !n.empty() && std::all_of(n.begin(), n.end(), [](const json& v) { return v.is_number(); }))
        ref.n = n.get<std::vector<double>>();
      else throw ConfigError("reference.n must be a number or a nonempty list of numbers");
    }
    ref.eps_dot_0 = r.optional<double>("eps_dot_0");
    const std::string norm = r.get<std::string>("rate_norm", "effective");
    if (norm == "effective") ref.rate_norm = RateNorm::Effective;
    else if (norm == "frobenius") ref.rate_norm = RateNorm::Frobenius;
    else throw ConfigError("reference.rate_norm must be effective or frobenius");
    ref.sigma_y = r.get("sigma_y", ref.sigma_y);
    ref.rates = r.get<std::vector<double>>("rates", {});
    if (r.has("johnson_cook")) {
      ObjectReader j(r.child("johnson_cook"), "reference.johnson_cook");
      auto& p = ref.johnson_cook;
      p.A = j.get("A", p.A);
      p.B = j.get("B", p.B);
      p.C = j.get("C", p.C);
      p.m = j.get("m", p.m);
      p.n_hard = j.get("n_hard", p.n_hard);
      p.r_star = j.get("r_star", p.r_star);
      p.T = j.get("T", p.T);
      p.T0 = j.get("T0", p.T0);
      p.Tm = j.get("Tm", p.Tm);
      j.finish();
    }
    if (r.has("hall_petch")) {
      ObjectReader h(r.child("hall_petch"), "reference.hall_petch");
      auto& p = ref.hall_petch;
      p.H = h.get("H", p.H);
      p.mu = h.get("mu", p.mu);
      p.b = h.get("b", p.b);
      p.exponent = h.get("exponent", p.exponent);
      ref.grains_um = h.get("grains_um", ref.grains_um);
      ref.friction_mpa = h.get("friction_mpa", ref.friction_mpa);
      h.finish();
    }
    r.finish();
    c.reference = ref;
  }
  if (top.has("data")) {
    ObjectReader r(top.child("data"), "data");
    if (r.has("manifest")) c.manifest = r.as<std::string>("manifest");
    r.finish();
  }
  if (top.has("model")) {
    ObjectReader r(top.child("model"), "model");
    auto& m = c.model;
    try {
      m.experiment = experiment_from_string(r.get<std::string>("experiment", "perfect"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("model.experiment: ") + e.what());
    }
    m.arch.hidden = r.get("hidden", m.arch.hidden);
    if (r.has("mix")) {
      ObjectReader x(r.child("mix"), "model.mix");
      try {
        m.arch.mix.pair = mix_pair_from_string(x.get<std::string>("pair", "relu+logistic"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model.mix.pair: ") + e.what());
      }
      m.arch.mix.alpha1 = x.get("alpha1", m.arch.mix.alpha1);
      m.arch.mix.alpha2 = x.get("alpha2", m.arch.mix.alpha2);
      m.arch.mix.trainable = x.get("trainable", m.arch.mix.trainable);
      x.finish();
    }
    m.arch.nonneg_potential_bias = r.get("nonneg_potential_bias", m.arch.nonneg_potential_bias);
    m.arch.kink_sharpness = r.get("kink_sharpness", m.arch.kink_sharpness);
    m.arch.kink_span = r.get("kink_span", m.arch.kink_span);
    m.arch.deep_bias = r.get("deep_bias", m.arch.deep_bias);
    m.arch.weight_max = r.get("weight_max", m.arch.weight_max);
    m.arch.hardening_weight_max = r.get("hardening_weight_max", m.arch.hardening_weight_max);
    m.arch.initial_hardening = r.get("initial_hardening", m.arch.initial_hardening);
    m.arch.hall_petch_share = r.get("hall_petch_share", m.arch.hall_petch_share);
    m.rate_scale = r.optional<double>("rate_scale");
    m.stress_scale = r.optional<double>("stress_scale");
    m.strain_scale = r.get("strain_scale", m.strain_scale);
    m.grain_scale = r.optional<double>("grain_scale");
    r.finish();
  }
  if (top.has("training")) {
    ObjectReader r(top.child("training"), "training");
    auto& t = c.training;
    t.epochs = r.get("epochs", t.epochs);
    t.lr_max = r.get("lr_max", t.lr_max);
    t.lr_min = r.get("lr_min", t.lr_min);
    t.weight_decay = r.get("weight_decay", t.weight_decay);
    t.nr_tol = r.get("nr_tol", t.nr_tol);
    t.nr_max_iter = r.get("nr_max_iter", t.nr_max_iter);
    t.elastic_mask = r.get("elastic_mask", t.elastic_mask);
    t.r_min = r.get("r_min", t.r_min);
    t.loss_normalization = r.optional<double>("loss_normalization");
    r.finish();
  }
  if (top.has("extrapolate")) {
    ObjectReader r(top.child("extrapolate"), "extrapolate");
    auto& e = c.extrapolate;
    if (r.has("parameters")) e.parameters = r.as<std::string>("parameters");
    e.target_strain = r.get("target_strain", e.target_strain);
    e.steps = r.optional<int>("steps");
    e.training_strain = r.optional<double>("training_strain");
    e.grains_um = r.get("grains_um", e.grains_um);
    e.compare_reference = r.get("compare_reference", e.compare_reference);
    r.finish();
  }
  if (top.has("discover")) {
    ObjectReader r(top.child("discover"), "discover");
    if (r.has("parameters")) c.discover.parameters = r.as<std::string>("parameters");
    c.discover.grains_um = r.get("grains_um", c.discover.grains_um);
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text, nullptr, true, true);  // comments allowed
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path);
}

inline void RunConfig::validate() const {
  auto positive_list = [](const std::vector<double>& v, const std::string& what) {
    for (double x : v)
      if (!(x > 0.0)) throw ConfigError(what + " entries must be positive");
  };
  try {
    elastic.validate();
    loading.validate();
    training.validate();
    model.arch.mix.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (loading.steps > 100000) throw ConfigError("loading.steps is unreasonably large");
  if (model.arch.hidden.empty()) throw ConfigError("model.hidden needs at least one layer");
  for (int h : model.arch.hidden)
    if (h < 1) throw ConfigError("model.hidden sizes must be positive");
  if (model.rate_scale && !(*model.rate_scale > 0.0)) throw ConfigError("model.rate_scale must be positive");
  if (model.stress_scale && !(*model.stress_scale > 0.0)) throw ConfigError("model.stress_scale must be positive");
  if (!(model.strain_scale > 0.0)) throw ConfigError("model.strain_scale must be positive");
  if (model.grain_scale && !(*model.grain_scale > 0.0)) throw ConfigError("model.grain_scale must be positive");
  if (!(model.arch.initial_hardening > 0.0)) throw ConfigError("model.initial_hardening must be positive");
  if (!(model.arch.hall_petch_share > 0.0 && model.arch.hall_petch_share < 1.0))
    throw ConfigError("model.hall_petch_share must lie in (0, 1)");
  if (!(model.arch.kink_sharpness > 0.0) || !(model.arch.kink_span > 0.0) || !(model.arch.deep_bias >= 0.0) ||
      !(model.arch.weight_max > 0.0) || !(model.arch.hardening_weight_max > 0.0))
    throw ConfigError("model initialisation settings must be positive");
  if (reference) {
    const auto& r = *reference;
    for (double n : r.n)
      if (!(n >= 1.0)) throw ConfigError("reference.n must be at least 1");
    if (r.eps_dot_0 && !(*r.eps_dot_0 > 0.0)) throw ConfigError("reference.eps_dot_0 must be positive");
    if (!(r.sigma_y > 0.0)) throw ConfigError("reference.sigma_y must be positive");
    positive_list(r.rates, "reference.rates");
    positive_list(r.grains_um, "reference.hall_petch.grains_um");
    if (!(r.friction_mpa >= 0.0)) throw ConfigError("reference.hall_petch.friction_mpa must be nonnegative");
    if (!(r.hall_petch.H > 0.0 && r.hall_petch.mu > 0.0 && r.hall_petch.b > 0.0 && r.hall_petch.exponent > 0.0))
      throw ConfigError("reference.hall_petch parameters must be positive");
    try {
      r.johnson_cook.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (r.model == ReferenceModel::HallPetch && r.grains_um.empty())
      throw ConfigError("reference.hall_petch.grains_um must list at least one grain size");
  }
  if (!(extrapolate.target_strain > 0.0)) throw ConfigError("extrapolate.target_strain must be positive");
  if (extrapolate.steps && *extrapolate.steps < 1) throw ConfigError("extrapolate.steps must be at least 1");
  if (extrapolate.training_strain && !(*extrapolate.training_strain > 0.0))
    throw ConfigError("extrapolate.training_strain must be positive");
  positive_list(extrapolate.grains_um, "extrapolate.grains_um");
  positive_list(discover.grains_um, "discover.grains_um");
  if (discover.grains_um.empty()) throw ConfigError("discover.grains_um must not be empty");
}

/// Fully resolved configuration, for the run report.
inline json RunConfig::echo() const {
  json j;
  j["seed"] = seed;
  j["elastic"] = {{"E", elastic.E}, {"nu", elastic.nu}};
  j["loading"] = {{"strain_rate", loading.strain_rate}, {"target_strain", loading.target_strain},
                  {"stepping", detail::to_string(loading.stepping)}, {"steps", loading.steps},
                  {"growth", loading.growth}, {"mode", detail::to_string(loading.mode)}};
  if (reference) {
    const auto& r = *reference;
    json ref = {{"model", detail::to_string(r.model)}, {"n", r.n}, {"rate_norm", detail::to_string(r.rate_norm)},
                {"sigma_y", r.sigma_y}, {"rates", r.rates}};
    if (r.eps_dot_0) ref["eps_dot_0"] = *r.eps_dot_0;
    const auto& p = r.johnson_cook;
    ref["johnson_cook"] = {{"A", p.A}, {"B", p.B}, {"C", p.C}, {"m", p.m}, {"n_hard", p.n_hard},
                           {"r_star", p.r_star}, {"T", p.T}, {"T0", p.T0}, {"Tm", p.Tm}};
    const auto& h = r.hall_petch;
    ref["hall_petch"] = {{"H", h.H}, {"mu", h.mu}, {"b", h.b}, {"exponent", h.exponent},
                         {"grains_um", r.grains_um}, {"friction_mpa", r.friction_mpa}};
    j["reference"] = ref;
  }
  if (manifest) j["data"] = {{"manifest", manifest->generic_string()}};
  const auto& a = model.arch;
  j["model"] = {{"experiment", to_string(model.experiment)},
                {"hidden", a.hidden},
                {"mix", {{"pair", to_string(a.mix.pair)}, {"alpha1", a.mix.alpha1}, {"alpha2", a.mix.alpha2},
                         {"trainable", a.mix.trainable}}},
                {"nonneg_potential_bias", a.nonneg_potential_bias},
                {"kink_sharpness", a.kink_sharpness},
                {"kink_span", a.kink_span},
                {"deep_bias", a.deep_bias},
                {"weight_max", a.weight_max},
                {"hardening_weight_max", a.hardening_weight_max},
                {"initial_hardening", a.initial_hardening},
                {"hall_petch_share", a.hall_petch_share},
                {"strain_scale", model.strain_scale}};
  if (model.grain_scale) j["model"]["grain_scale"] = *model.grain_scale;
  if (model.rate_scale) j["model"]["rate_scale"] = *model.rate_scale;
  if (model.stress_scale) j["model"]["stress_scale"] = *model.stress_scale;
  const auto& t = training;
  j["training"] = {{"epochs", t.epochs}, {"lr_max", t.lr_max}, {"lr_min", t.lr_min},
                   {"weight_decay", t.weight_decay}, {"nr_tol", t.nr_tol}, {"nr_max_iter", t.nr_max_iter},
                   {"elastic_mask", t.elastic_mask}, {"r_min", t.r_min}};
  if (t.loss_normalization) j["training"]["loss_normalization"] = *t.loss_normalization;
  return j;
}

}  // namespace nnevp

#endif  // NNEVP_CONFIG_HPP
