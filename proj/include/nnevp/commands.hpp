#ifndef NNEVP_COMMANDS_HPP
#define NNEVP_COMMANDS_HPP

/**
 * @file commands.hpp
 *
 * The four CLI commands. Each takes a validated RunConfig, writes its files
 * under the output directory and throws on failure; run_command maps the
 * exception type to the process exit code.
 *
 * Relative paths inside a config resolve against the config file. A missing
 * data.manifest or parameters path defaults to the file the previous stage
 * writes into the same output directory.
 */

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "nnevp/config.hpp"
#include "nnevp/data.hpp"
#include "nnevp/io.hpp"
#include "nnevp/plot.hpp"
#include "nnevp/trainer.hpp"

namespace nnevp {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3 };

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Worker count: NNEVP_THREADS if set, else the hardware concurrency.
inline unsigned thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NNEVP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

/// Runs job(i) for i in [0, n) on up to thread_budget() threads.
template <class Job>
void parallel_for(std::size_t n, Job&& job) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_budget(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return p;
}

inline std::string color(std::size_t i) { return palette()[i % palette().size()]; }

inline std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
  return s;
}

inline Series curve_series(const Curve& c, const std::string& label, std::size_t color_index, bool dashed = false) {
  Series s;
  s.label = label;
  s.x = c.strain;
  s.y = c.stress;
  s.color = color(color_index);
  s.dashed = dashed;
  return s;
}

inline std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline Table hall_petch_csv_table(const HallPetchTable& t, const std::optional<ReferenceConfig>& ref) {
  Table out{{"grain_um", "stress_mpa", "in_training_range"}, {}};
  if (ref) out.header.push_back("reference_mpa");
  for (std::size_t i = 0; i < t.grain_um.size(); ++i) {
    const double d = t.grain_um[i];
    const bool inside = d >= t.fit_min_um * (1.0 - 1e-12) && d <= t.fit_max_um * (1.0 + 1e-12);
    std::vector<std::string> row{format_double(d), format_double(t.stress_mpa[i]), inside ? "1" : "0"};
    if (ref) row.push_back(format_double(hall_petch_stress(d, ref->hall_petch)));
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace detail

/// One synthetic curve per (rate, n, grain) combination of the reference section.
struct ReferenceCase {
  std::string name;
  LoadingProgram program;
  double n = 10.0;
  std::optional<double> grain_um;
};

inline std::vector<ReferenceCase> reference_cases(const RunConfig& cfg) {
  if (!cfg.reference) throw ConfigError("generate needs a reference section");
  const ReferenceConfig& ref = *cfg.reference;
  const std::vector<double> rates = ref.rates.empty() ? std::vector<double>{cfg.loading.strain_rate} : ref.rates;
  std::vector<std::optional<double>> grains{std::nullopt};
  if (ref.model == ReferenceModel::HallPetch) grains.assign(ref.grains_um.begin(), ref.grains_um.end());
  const std::string prefix = ref.model == ReferenceModel::PowerLaw      ? "power"
                             : ref.model == ReferenceModel::JohnsonCook ? "jc"
                                                                        : "hp";
  std::vector<ReferenceCase> out;
  for (double rate : rates)
    for (double n : ref.n)
      for (const auto& d : grains) {
        ReferenceCase c;
        c.program = cfg.loading;
        c.program.strain_rate = rate;
        c.n = n;
        c.grain_um = d;
        c.name = prefix + "_n" + format_double(n);
        if (d) c.name += "_d" + format_double(*d);
        if (rates.size() > 1) c.name += "_rate" + format_double(rate);
        c.name = detail::safe_name(c.name);
        out.push_back(c);
      }
  return out;
}

/// Ground-truth flow model of the reference section.
inline PowerLawFlow reference_flow(const RunConfig& cfg, double n, std::optional<double> grain_um) {
  const ReferenceConfig& ref = *cfg.reference;
  PowerLawParams pl;
  pl.n = n;
  pl.sigma_y = ref.sigma_y;
  pl.eps_dot_0 = ref.eps_dot_0.value_or(reference_rate(cfg.loading, ref.rate_norm));
  switch (ref.model) {
    case ReferenceModel::PowerLaw: return PowerLawFlow(pl);
    case ReferenceModel::JohnsonCook: return PowerLawFlow(pl, ref.johnson_cook);
    case ReferenceModel::HallPetch: {
      if (!grain_um) throw ConfigError("the Hall-Petch reference needs a grain size");
      // Initial yield = friction + Hall-Petch stress; Johnson-Cook A is replaced.
      JohnsonCookParams jc = ref.johnson_cook;
      jc.A = ref.friction_mpa + hall_petch_stress(*grain_um, ref.hall_petch);
      return PowerLawFlow(pl, jc);
    }
  }
  throw ConfigError("unknown reference model");
}

inline Simulation simulate_reference(const RunConfig& cfg, const LoadingProgram& prog, double n,
                                     std::optional<double> grain_um) {
  const PowerLawFlow model = reference_flow(cfg, n, grain_um);
  SolverOptions opt;
  opt.tol = cfg.training.nr_tol;
  opt.max_iter = cfg.training.nr_max_iter;
  Simulation sim = simulate_curve(prog, model, cfg.elastic, opt);
  sim.curve.grain_size_um = grain_um;
  return sim;
}

inline std::filesystem::path manifest_path(const RunConfig& cfg) {
  return cfg.manifest ? cfg.resolve(*cfg.manifest) : cfg.output_dir / "dataset.json";
}

inline std::filesystem::path parameters_path(const RunConfig& cfg, const std::optional<std::filesystem::path>& configured) {
  return configured ? cfg.resolve(*configured) : cfg.output_dir / "parameters.json";
}

// ---------------------------------------------------------------- generate

inline void cmd_generate(const RunConfig& cfg, std::ostream& log) {
  const auto cases = reference_cases(cfg);
  std::vector<Simulation> sims(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    sims[i] = simulate_reference(cfg, cases[i].program, cases[i].n, cases[i].grain_um);
  });

  DatasetManifest manifest;
  manifest.description = "synthetic " + detail::to_string(cfg.reference->model) + " curves";
  Plot plot = make_plot("Synthetic stress-strain curves", "strain", "stress (MPa)");
  Table summary{{"name", "n", "grain_um", "strain_rate", "final_stress_mpa", "max_nr_iters", "halved_steps"}, {}};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Simulation& sim = sims[i];
    if (!sim.ok) throw NumericalFailure("reference curve '" + cases[i].name + "': " + sim.diagnostic);
    sim.curve.name = cases[i].name;
    const std::string file = "curves/" + cases[i].name + ".csv";
    write_text_file(cfg.output_dir / file, curve_csv(sim.curve));
    manifest.curves.push_back({file, cases[i].name, cases[i].grain_um, cases[i].program.strain_rate});
    plot.series.push_back(detail::curve_series(sim.curve, cases[i].name, i));
    int max_it = 0, halved = 0;
    for (const auto& s : sim.stats) {
      max_it = std::max(max_it, s.iterations);
      halved += s.halved ? 1 : 0;
    }
    summary.rows.push_back({cases[i].name, format_double(cases[i].n),
                            cases[i].grain_um ? format_double(*cases[i].grain_um) : "", format_double(cases[i].program.strain_rate),
                            format_double(sim.curve.stress.back()), std::to_string(max_it), std::to_string(halved)});
    log << "generated " << file << "\n";
  }
  write_text_file(cfg.output_dir / "dataset.json", manifest_to_json(manifest).dump(2) + "\n");
  write_text_file(cfg.output_dir / "curves.svg", render_svg(plot));

  ReportWriter r;
  r.kv("command", std::string("generate"));
  r.kv("seed", std::to_string(cfg.seed));
  r.kv("reference_model", detail::to_string(cfg.reference->model));
  r.kv("curves", static_cast<long>(cases.size()));
  r.section("config", cfg.echo().dump(2));
  r.table("curves", summary);
  write_text_file(cfg.output_dir / "generate_report.txt", r.str());
}

// ------------------------------------------------------------------- train

inline CurveSet load_training_data(const RunConfig& cfg) {
  const auto path = manifest_path(cfg);
  if (!std::filesystem::exists(path)) throw ConfigError("dataset manifest '" + path.string() + "' not found");
  CurveSet data = load_dataset(path, cfg.loading);
  if (cfg.model.experiment == Experiment::HallPetch)
    for (const Curve& c : data.curves)
      if (!c.grain_size_um) throw ConfigError("curve '" + c.name + "' has no grain size, required by the hall-petch experiment");
  return data;
}

inline std::vector<double> training_grains(const CurveSet& data) {
  std::vector<double> g;
  for (const Curve& c : data.curves)
    if (c.grain_size_um) g.push_back(*c.grain_size_um);
  return detail::distinct_sorted(g);
}

inline NetworkSet initial_networks(const RunConfig& cfg, const CurveSet& data) {
  ModelScales scales;
  scales.rate = cfg.model.rate_scale.value_or(cfg.loading.strain_rate);
  double peak = 0.0;
  for (const Curve& c : data.curves)
    for (double s : c.stress) peak = std::max(peak, std::fabs(s));
  scales.stress = cfg.model.stress_scale.value_or(peak > 0.0 ? peak : 100.0);
  scales.strain = cfg.model.strain_scale;
  const auto grains = training_grains(data);
  scales.grain = cfg.model.grain_scale.value_or(grains.empty() ? 1.0 : grains.front());
  std::mt19937_64 rng(cfg.seed);
  return make_network_set(cfg.model.experiment, cfg.model.arch, scales, rng);
}

inline Table nr_summary_rows(const std::map<int, long>& h, long& total, long& le4, long& gt10, int& max_it) {
  total = le4 = gt10 = 0;
  max_it = 0;
  for (const auto& [k, v] : h) {
    total += v;
    if (k <= 4) le4 += v;
    if (k > 10) gt10 += v;
    max_it = std::max(max_it, k);
  }
  return nr_histogram_table(h);
}

inline TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  const CurveSet data = load_training_data(cfg);
  NetworkSet nets = initial_networks(cfg, data);
  TrainConfig tc = cfg.training;
  tc.seed = cfg.seed;
  const int every = std::max(1, tc.epochs / 10);
  TrainResult res = train(data, std::move(nets), cfg.loading, cfg.elastic, tc,
                          [&](int epoch, const NetworkSet&, double loss) {
                            if (epoch % every == 0 || epoch + 1 == tc.epochs)
                              log << "epoch " << epoch << " loss " << format_double(loss) << "\n";
                          });
  const auto grains = training_grains(data);
  const RunReport& rep = res.report;
  const bool failed = rep.aborted || res.losses.empty() || !std::isfinite(res.losses.back().loss) ||
                      rep.predictions.size() != data.curves.size();

  ReportWriter r;
  r.kv("command", std::string("train"));
  r.kv("seed", std::to_string(cfg.seed));
  r.kv("experiment", to_string(cfg.model.experiment));
  r.kv("curves", static_cast<long>(data.curves.size()));
  r.kv("epochs_completed", static_cast<long>(res.losses.size()));
  if (!res.losses.empty()) r.kv("final_loss", res.losses.back().loss);
  r.kv("aborted", rep.aborted);
  r.kv("failed_epochs", rep.failed_epochs);
  r.kv("nonfinite_gradient_epochs", rep.nonfinite_gradient_epochs);
  r.kv("degenerate_hall_petch", rep.degenerate_hall_petch);
  long total, le4, gt10;
  int max_it;
  const Table hist = nr_summary_rows(rep.nr_histogram, total, le4, gt10, max_it);
  r.kv("nr_steps", total);
  r.kv("nr_fraction_at_most_4", total ? static_cast<double>(le4) / static_cast<double>(total) : 0.0);
  r.kv("nr_steps_over_10", gt10);
  r.kv("nr_max_iterations", max_it);
  r.kv("nr_failures", rep.nr_failures);
  r.kv("stress_scale_mpa", res.nets.stress_scale);
  r.kv("rate_scale_per_s", res.nets.rate_scale);
  if (!rep.diagnostic.empty()) r.kv("diagnostic", rep.diagnostic);
  r.section("config", cfg.echo().dump(2));

  Table fits{{"name", "grain_um", "max_abs_error_mpa", "final_stress_mpa", "final_prediction_mpa"}, {}};
  for (std::size_t i = 0; i < rep.predictions.size() && i < data.curves.size(); ++i) {
    const Curve& truth = data.curves[i];
    const Curve& pred = rep.predictions[i];
    double worst = 0.0;
    for (std::size_t t = 0; t < pred.size() && t < truth.size(); ++t)
      worst = std::max(worst, std::fabs(pred.stress[t] - truth.stress[t]));
    fits.rows.push_back({truth.name, truth.grain_size_um ? format_double(*truth.grain_size_um) : "",
                         format_double(worst), format_double(truth.stress.back()),
                         pred.size() ? format_double(pred.stress.back()) : ""});
    const std::string stem = detail::safe_name(truth.name);
    write_text_file(cfg.output_dir / ("fit_" + stem + ".csv"), curve_csv(pred));
    Plot p = make_plot("Fit: " + truth.name, "strain", "stress (MPa)");
    p.series.push_back(detail::curve_series(truth, "data", 0));
    p.series.back().markers = true;
    p.series.push_back(detail::curve_series(pred, "model", 1, true));
    write_text_file(cfg.output_dir / ("fit_" + stem + ".svg"), render_svg(p));
  }
  r.table("fits", fits);
  r.table("loss", loss_table(res.losses));
  r.table("nr_histogram", hist);

  if (!failed && res.nets.hall_petch && grains.size() >= 2) {
    const HallPetchTable hp = discover_hall_petch(res.nets, grains, default_hall_petch_grid());
    r.kv("hall_petch_slope", hp.slope);
    r.table("hall_petch", detail::hall_petch_csv_table(hp, std::nullopt));
  }

  write_text_file(cfg.output_dir / "loss.csv", loss_table(res.losses).csv());
  Plot lp = make_plot("Training loss", "epoch", "loss");
  lp.logy = true;
  Series ls;
  ls.label = "loss";
  for (const auto& l : res.losses) {
    ls.x.push_back(l.epoch);
    ls.y.push_back(l.loss);
  }
  lp.series.push_back(ls);
  write_text_file(cfg.output_dir / "loss.svg", render_svg(lp));
  if (!failed) save_parameters(cfg.output_dir / "parameters.json", res.nets, grains);
  write_text_file(cfg.output_dir / "report.txt", r.str());

  if (failed)
    throw NumericalFailure("training failed" + (rep.diagnostic.empty() ? std::string() : ": " + rep.diagnostic));
  log << "wrote " << (cfg.output_dir / "parameters.json").string() << "\n";
  return res;
}

// ------------------------------------------------------------- extrapolate

/// Loads a parameter file and checks it against the configured model.
inline ParameterFile load_checked_parameters(const RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("parameter file '" + path.string() + "' not found");
  ParameterFile f = load_parameters(path);
  if (f.nets.experiment() != cfg.model.experiment)
    throw ConfigError("parameter file holds a " + to_string(f.nets.experiment()) + " model but the config asks for " +
                      to_string(cfg.model.experiment));
  std::vector<int> expected{1};
  expected.insert(expected.end(), cfg.model.arch.hidden.begin(), cfg.model.arch.hidden.end());
  expected.push_back(1);
  if (f.nets.potential.sizes() != expected)
    throw ConfigError("parameter file layer sizes do not match model.hidden");
  return f;
}

struct ExtrapolationOutcome {
  std::string name;
  Curve prediction;
  std::optional<Curve> reference;
  double final_signed_error = 0.0;  // prediction / reference - 1 at the last point
};

inline LoadingProgram extended_program(const RunConfig& cfg) {
  LoadingProgram p = cfg.loading;
  p.target_strain = cfg.extrapolate.target_strain;
  const double ratio = p.target_strain / cfg.loading.target_strain;
  p.steps = cfg.extrapolate.steps.value_or(std::max(1, static_cast<int>(std::lround(cfg.loading.steps * ratio))));
  return p;
}

inline std::vector<ExtrapolationOutcome> cmd_extrapolate(const RunConfig& cfg, std::ostream& log) {
  const ParameterFile pf = load_checked_parameters(cfg, parameters_path(cfg, cfg.extrapolate.parameters));
  const LoadingProgram prog = extended_program(cfg);
  const double limit = cfg.extrapolate.training_strain.value_or(cfg.loading.target_strain);
  std::vector<std::optional<double>> grains{std::nullopt};
  if (pf.nets.hall_petch) {
    const auto& g = cfg.extrapolate.grains_um.empty() ? pf.training_grains_um : cfg.extrapolate.grains_um;
    if (g.empty()) throw ConfigError("extrapolate.grains_um is required: the parameter file lists no training grains");
    grains.assign(g.begin(), g.end());
  }
  const bool compare = cfg.reference && cfg.extrapolate.compare_reference;

  ReportWriter r;
  r.kv("command", std::string("extrapolate"));
  r.kv("seed", std::to_string(cfg.seed));
  r.kv("training_strain", limit);
  r.kv("target_strain", prog.target_strain);
  r.kv("steps", prog.steps);
  Table t{{"name", "final_strain", "final_prediction_mpa"}, {}};
  if (compare) {
    t.header.insert(t.header.end(), {"final_reference_mpa", "final_signed_error", "max_abs_error_inside",
                                     "max_abs_error_beyond"});
    r.kv("reference_n", cfg.reference->n.front());
  }

  std::vector<ExtrapolationOutcome> out;
  for (std::size_t gi = 0; gi < grains.size(); ++gi) {
    ExtrapolationOutcome o;
    o.name = grains[gi] ? detail::safe_name("extrapolation_d" + format_double(*grains[gi])) : "extrapolation";
    Simulation sim = extrapolate_strain(pf.nets, prog, cfg.elastic, grains[gi], cfg.training.nr_tol,
                                        cfg.training.nr_max_iter);
    if (!sim.ok) throw NumericalFailure(o.name + ": " + sim.diagnostic);
    o.prediction = std::move(sim.curve);
    o.prediction.name = o.name;
    o.prediction.grain_size_um = grains[gi];
    o.prediction.extrapolated.assign(o.prediction.size(), false);
    for (std::size_t i = 0; i < o.prediction.size(); ++i)
      o.prediction.extrapolated[i] = o.prediction.strain[i] > limit * (1.0 + 1e-12);
    write_text_file(cfg.output_dir / (o.name + ".csv"), curve_csv(o.prediction));

    Plot p = make_plot("Extrapolation in strain", "strain", "stress (MPa)");
    p.vlines = {limit};
    p.vline_label = "training limit";
    p.series.push_back(detail::curve_series(o.prediction, "model", 1));
    std::vector<std::string> row{o.name, format_double(o.prediction.strain.back()),
                                 format_double(o.prediction.stress.back())};
    if (compare) {
      Simulation ref = simulate_reference(cfg, prog, cfg.reference->n.front(), grains[gi]);
      if (!ref.ok) throw NumericalFailure("reference curve: " + ref.diagnostic);
      o.reference = std::move(ref.curve);
      o.final_signed_error = o.prediction.stress.back() / o.reference->stress.back() - 1.0;
      double inside = 0.0, beyond = 0.0;
      for (std::size_t i = 0; i < o.prediction.size(); ++i) {
        const double e = std::fabs(o.prediction.stress[i] - o.reference->stress[i]);
        double& slot = o.prediction.extrapolated[i] ? beyond : inside;
        slot = std::max(slot, e);
      }
      p.series.push_back(detail::curve_series(*o.reference, "reference", 0, true));
      row.insert(row.end(), {format_double(o.reference->stress.back()), format_double(o.final_signed_error),
                             format_double(inside), format_double(beyond)});
    }
    write_text_file(cfg.output_dir / (o.name + ".svg"), render_svg(p));
    t.rows.push_back(row);
    log << "wrote " << (cfg.output_dir / (o.name + ".csv")).string() << "\n";
    out.push_back(std::move(o));
  }
  r.table("extrapolation", t);
  write_text_file(cfg.output_dir / "extrapolation_report.txt", r.str());
  return out;
}

// ------------------------------------------------------------- discover-hp

struct DiscoveryOutcome {
  HallPetchTable table;
  bool slope_available = false;
  std::string warning;
};

inline DiscoveryOutcome cmd_discover_hp(const RunConfig& cfg, std::ostream& log, std::ostream& warn) {
  const auto path = parameters_path(cfg, cfg.discover.parameters);
  if (!std::filesystem::exists(path)) throw ConfigError("parameter file '" + path.string() + "' not found");
  const ParameterFile pf = load_parameters(path);
  if (!pf.nets.hall_petch)
    throw ConfigError("parameter file '" + path.string() + "' has no Hall-Petch network; train with experiment hall-petch");

  DiscoveryOutcome o;
  const auto grains = detail::distinct_sorted(pf.training_grains_um);
  if (grains.size() >= 2) {
    o.table = discover_hall_petch(pf.nets, grains, cfg.discover.grains_um);
    o.slope_available = true;
  } else {
    o.warning = "the network was trained on a single grain size; its grain dependence is unconstrained by data "
                "and no slope is reported";
    warn << "warning: " << o.warning << "\n";
    for (double d : cfg.discover.grains_um) {
      o.table.grain_um.push_back(d);
      o.table.stress_mpa.push_back(hallpetch_value(*pf.nets.hall_petch, d));
    }
    o.table.fit_min_um = o.table.fit_max_um = grains.empty() ? 0.0 : grains.front();
  }
  std::optional<ReferenceConfig> ref;
  if (cfg.reference && cfg.reference->model == ReferenceModel::HallPetch) ref = cfg.reference;

  write_text_file(cfg.output_dir / "hall_petch.csv", detail::hall_petch_csv_table(o.table, ref).csv());
  ReportWriter r;
  r.kv("command", std::string("discover-hp"));
  r.kv("training_grains_um", [&] {
    std::string s;
    for (double g : grains) s += (s.empty() ? "" : " ") + format_double(g);
    return s;
  }());
  if (o.slope_available) {
    r.kv("loglog_slope", o.table.slope);
    r.kv("fit_min_um", o.table.fit_min_um);
    r.kv("fit_max_um", o.table.fit_max_um);
  } else {
    r.kv("warning", o.warning);
  }
  if (ref) r.kv("reference_exponent", -ref->hall_petch.exponent);
  r.table("hall_petch", detail::hall_petch_csv_table(o.table, ref));
  write_text_file(cfg.output_dir / "hall_petch_report.txt", r.str());

  Plot p = make_plot("Learned grain-size strengthening", "grain size (um)", "stress (MPa)");
  p.logx = p.logy = true;
  Series s;
  s.label = "network";
  s.x = o.table.grain_um;
  s.y = o.table.stress_mpa;
  s.markers = true;
  p.series.push_back(s);
  if (ref) {
    Series rs;
    rs.label = "reference";
    rs.color = detail::color(1);
    rs.dashed = true;
    rs.x = o.table.grain_um;
    for (double d : rs.x) rs.y.push_back(hall_petch_stress(d, ref->hall_petch));
    p.series.push_back(rs);
  }
  if (o.slope_available) {
    p.vlines = {o.table.fit_min_um, o.table.fit_max_um};
    p.vline_label = "fit range";
  }
  write_text_file(cfg.output_dir / "hall_petch.svg", render_svg(p));
  log << "wrote " << (cfg.output_dir / "hall_petch.csv").string() << "\n";
  return o;
}

// --------------------------------------------------------------- dispatch

struct CommandLine {
  std::string command;
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

/// Loads the config, applies overrides and runs one command. Never throws.
inline int run_command(const CommandLine& cl, std::ostream& log = std::cerr, std::ostream& err = std::cerr) {
  try {
    RunConfig cfg = load_config(cl.config);
    if (cl.out) cfg.output_dir = *cl.out;
    if (cl.seed) cfg.seed = *cl.seed;
    cfg.training.seed = cfg.seed;
    if (cl.command == "generate") cmd_generate(cfg, log);
    else if (cl.command == "train") cmd_train(cfg, log);
    else if (cl.command == "extrapolate") cmd_extrapolate(cfg, log);
    else if (cl.command == "discover-hp") cmd_discover_hp(cfg, log, err);
    else throw ConfigError("unknown command '" + cl.command + "'");
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FileFormatError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CurveFormatError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InsufficientData& e) {
    err << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SolverError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace nnevp

#endif  // NNEVP_COMMANDS_HPP
