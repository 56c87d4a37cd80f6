#ifndef NNEVP_IO_HPP
#define NNEVP_IO_HPP

/**
 * @file io.hpp
 *
 * JSON files: trained parameters, dataset manifests and run reports.
 * Doubles are written in shortest round-trip form, so a parameter file read
 * back reproduces every value bit for bit.
 */

#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include "json.hpp"
#endif

#include "nnevp/data.hpp"
#include "nnevp/neural_model.hpp"
#include "nnevp/trainer.hpp"

namespace nnevp {

using json = nlohmann::json;

inline constexpr int kParameterFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

class FileFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Perfect: return "perfect";
    case Experiment::Hardening: return "hardening";
    case Experiment::HallPetch: return "hall-petch";
  }
  return "unknown";
}

inline Experiment experiment_from_string(const std::string& s) {
  if (s == "perfect") return Experiment::Perfect;
  if (s == "hardening") return Experiment::Hardening;
  if (s == "hall-petch") return Experiment::HallPetch;
  throw std::invalid_argument("unknown experiment '" + s + "' (expected perfect, hardening or hall-petch)");
}

inline json net_to_json(const ConstrainedNet& net) {
  json j;
  j["profile"] = to_string(net.profile());
  j["sizes"] = net.sizes();
  j["nonneg_hidden_bias"] = net.nonneg_hidden_bias();
  j["input_scale"] = net.input_scale;
  j["output_scale"] = net.output_scale;
  if (net.profile() == ConstraintProfile::MonotoneIncreasing) {
    j["mix"] = {{"pair", to_string(net.mix().pair)},
                {"alpha1", net.mix().alpha1},
                {"alpha2", net.mix().alpha2},
                {"trainable", net.mix().trainable}};
  }
  for (double p : net.parameters())
    if (!std::isfinite(p)) throw FileFormatError("refusing to write a non-finite network parameter");
  j["parameters"] = net.parameters();
  return j;
}

inline ConstrainedNet net_from_json(const json& j) {
  try {
    const auto profile = profile_from_string(j.at("profile").get<std::string>());
    const auto sizes = j.at("sizes").get<std::vector<int>>();
    if (sizes.size() < 3 || sizes.front() != 1 || sizes.back() != 1)
      throw FileFormatError("network sizes must read 1, hidden..., 1");
    HardeningActivationMix mix;
    if (profile == ConstraintProfile::MonotoneIncreasing) {
      const json& m = j.at("mix");
      mix.pair = mix_pair_from_string(m.at("pair").get<std::string>());
      mix.alpha1 = m.at("alpha1").get<double>();
      mix.alpha2 = m.at("alpha2").get<double>();
      mix.trainable = m.at("trainable").get<bool>();
    }
    ConstrainedNet net(profile, std::vector<int>(sizes.begin() + 1, sizes.end() - 1), mix,
                       j.at("nonneg_hidden_bias").get<bool>());
    net.input_scale = j.at("input_scale").get<double>();
    net.output_scale = j.at("output_scale").get<double>();
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != net.parameter_count())
      throw FileFormatError("network has " + std::to_string(params.size()) + " parameters, layout needs " +
                            std::to_string(net.parameter_count()));
    net.parameters() = params;
    net.check_constraints();
    return net;
  } catch (const json::exception& e) {
    throw FileFormatError(std::string("malformed network entry: ") + e.what());
  }
}

struct ParameterFile {
  NetworkSet nets;
  std::vector<double> training_grains_um;
};

inline json parameters_to_json(const NetworkSet& nets, const std::vector<double>& training_grains_um = {}) {
  json j;
  j["format"] = "nnevp-parameters";
  j["format_version"] = kParameterFormatVersion;
  j["experiment"] = to_string(nets.experiment());
  j["rate_scale"] = nets.rate_scale;
  j["stress_scale"] = nets.stress_scale;
  j["training_grains_um"] = training_grains_um;
  j["networks"]["potential"] = net_to_json(nets.potential);
  if (nets.hardening) j["networks"]["hardening"] = net_to_json(*nets.hardening);
  if (nets.hall_petch) j["networks"]["hall_petch"] = net_to_json(*nets.hall_petch);
  return j;
}

inline ParameterFile parameters_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "nnevp-parameters") throw FileFormatError("not a parameter file");
    const int version = j.at("format_version").get<int>();
    if (version != kParameterFormatVersion)
      throw FileFormatError("unsupported parameter format version " + std::to_string(version));
    ParameterFile f;
    f.nets.rate_scale = j.at("rate_scale").get<double>();
    f.nets.stress_scale = j.at("stress_scale").get<double>();
    f.training_grains_um = j.at("training_grains_um").get<std::vector<double>>();
    const json& n = j.at("networks");
    f.nets.potential = net_from_json(n.at("potential"));
    if (n.contains("hardening")) f.nets.hardening = net_from_json(n.at("hardening"));
    if (n.contains("hall_petch")) f.nets.hall_petch = net_from_json(n.at("hall_petch"));
    if (f.nets.hall_petch && !f.nets.hardening) throw FileFormatError("a Hall-Petch network needs a hardening network");
    if (experiment_from_string(j.at("experiment").get<std::string>()) != f.nets.experiment())
      throw FileFormatError("experiment field does not match the networks present");
    return f;
  } catch (const json::exception& e) {
    throw FileFormatError(std::string("malformed parameter file: ") + e.what());
  }
}

inline void save_parameters(const std::filesystem::path& path, const NetworkSet& nets,
                            const std::vector<double>& training_grains_um = {}) {
  write_text_file(path, parameters_to_json(nets, training_grains_um).dump(2) + "\n");
}

inline ParameterFile load_parameters(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw FileFormatError(path.string() + ": " + e.what());
  }
  return parameters_from_json(j);
}

/// One curve of a multi-curve dataset. file is relative to the manifest.
struct ManifestEntry {
  std::string file;
  std::string name;
  std::optional<double> grain_size_um;
  std::optional<double> strain_rate;
};

struct DatasetManifest {
  std::string description;
  std::vector<ManifestEntry> curves;
};

inline json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format"] = "nnevp-dataset";
  j["format_version"] = kManifestFormatVersion;
  j["description"] = m.description;
  j["curves"] = json::array();
  for (const auto& e : m.curves) {
    json c;
    c["file"] = e.file;
    c["name"] = e.name;
    if (e.grain_size_um) c["grain_size_um"] = *e.grain_size_um;
    if (e.strain_rate) c["strain_rate"] = *e.strain_rate;
    j["curves"].push_back(c);
  }
  return j;
}

inline DatasetManifest manifest_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "nnevp-dataset") throw FileFormatError("not a dataset manifest");
    const int version = j.at("format_version").get<int>();
    if (version != kManifestFormatVersion)
      throw FileFormatError("unsupported manifest format version " + std::to_string(version));
    DatasetManifest m;
    m.description = j.value("description", "");
    for (const json& c : j.at("curves")) {
      ManifestEntry e;
      e.file = c.at("file").get<std::string>();
      e.name = c.value("name", std::filesystem::path(e.file).stem().string());
      if (c.contains("grain_size_um")) e.grain_size_um = c.at("grain_size_um").get<double>();
      if (c.contains("strain_rate")) e.strain_rate = c.at("strain_rate").get<double>();
      if (e.grain_size_um && !(*e.grain_size_um > 0.0))
        throw FileFormatError("grain size of '" + e.name + "' must be positive");
      m.curves.push_back(e);
    }
    if (m.curves.empty()) throw FileFormatError("dataset manifest lists no curves");
    return m;
  } catch (const json::exception& e) {
    throw FileFormatError(std::string("malformed dataset manifest: ") + e.what());
  }
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw FileFormatError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

/**
 * Reads every curve of a manifest and resamples it onto the program grid.
 * Manifest grain sizes and rates override the ones in the curve files.
 */
inline CurveSet load_dataset(const std::filesystem::path& manifest_path, const LoadingProgram& prog) {
  const DatasetManifest m = load_manifest(manifest_path);
  CurveSet set;
  for (const auto& e : m.curves) {
    const RawCurve raw = parse_curve_csv(manifest_path.parent_path() / e.file);
    Curve c = resample_to_grid(fit_interpolant(raw), prog);
    c.name = e.name;
    c.grain_size_um = e.grain_size_um ? e.grain_size_um : raw.grain_size_um;
    const auto rate = e.strain_rate ? e.strain_rate : raw.strain_rate;
    if (rate && std::fabs(*rate / prog.strain_rate - 1.0) > 1e-9)
      throw FileFormatError("curve '" + e.name + "' was recorded at strain rate " + format_double(*rate) +
                            " but the loading program applies " + format_double(prog.strain_rate));
    set.curves.push_back(std::move(c));
  }
  return set;
}

/// Comma separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += "\n";
    }
    return out;
  }
};

inline Table loss_table(const std::vector<LossRecord>& losses) {
  Table t{{"epoch", "loss", "lr"}, {}};
  for (const auto& r : losses) t.rows.push_back({std::to_string(r.epoch), format_double(r.loss), format_double(r.lr)});
  return t;
}

inline Table nr_histogram_table(const std::map<int, long>& h) {
  Table t{{"iterations", "steps"}, {}};
  for (const auto& [k, v] : h) t.rows.push_back({std::to_string(k), std::to_string(v)});
  return t;
}

/**
 * Plain-text report: "key: value" lines followed by "[name]" sections that
 * hold either a JSON block or a CSV table. Holds nothing time dependent.
 */
class ReportWriter {
 public:
  void kv(const std::string& key, const std::string& value) { head_ += key + ": " + value + "\n"; }
  void kv(const std::string& key, double value) { kv(key, format_double(value)); }
  void kv(const std::string& key, long value) { kv(key, std::to_string(value)); }
  void kv(const std::string& key, int value) { kv(key, std::to_string(value)); }
  void kv(const std::string& key, bool value) { kv(key, std::string(value ? "true" : "false")); }
  void section(const std::string& name, const std::string& body) {
    body_ += "\n[" + name + "]\n" + body;
    if (!body.empty() && body.back() != '\n') body_ += "\n";
  }
  void table(const std::string& name, const Table& t) { section(name, t.csv()); }
  std::string str() const { return head_ + body_; }

 private:
  std::string head_, body_;
};

}  // namespace nnevp

#endif  // NNEVP_IO_HPP
