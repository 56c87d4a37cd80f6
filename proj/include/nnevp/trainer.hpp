#ifndef NNEVP_TRAINER_HPP
#define NNEVP_TRAINER_HPP

/**
 * @file trainer.hpp
 *
 * Training by backpropagation through the material-point solver: dt-weighted
 * normalised squared stress error, AdamW with decoupled weight decay, cosine
 * annealing of the learning rate and projection onto the network
 * constraints after every update.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnevp/curve.hpp"
#include "nnevp/neural_model.hpp"
#include "nnevp/solver.hpp"

namespace nnevp {

struct TrainConfig {
  int epochs = 500;
  double lr_max = 1e-2;
  double lr_min = 1e-3;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double nr_tol = 1e-6;
  int nr_max_iter = 25;
  bool elastic_mask = false;
  double r_min = 1e-5;
  std::uint64_t seed = 42;
  std::optional<double> loss_normalization;  // overrides mean(sigma_true^2)

  void validate() const {
    if (epochs < 1) throw ParameterDomainError("epochs must be at least 1");
    if (!(lr_min > 0.0 && lr_max >= lr_min)) throw ParameterDomainError("need lr_max >= lr_min > 0");
    if (!(weight_decay >= 0.0)) throw ParameterDomainError("weight decay must be nonnegative");
    if (!(nr_tol > 0.0) || nr_max_iter < 1) throw ParameterDomainError("invalid Newton-Raphson settings");
    if (loss_normalization && !(*loss_normalization > 0.0))
      throw ParameterDomainError("loss normalisation must be positive");
  }
};

struct LossRecord {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

/// lr_min + (lr_max - lr_min)(1 + cos(pi e / E)) / 2.
inline double cosine_lr(int epoch, const TrainConfig& c) {
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(c.epochs);
  return c.lr_min + 0.5 * (c.lr_max - c.lr_min) * (1.0 + std::cos(phase));
}

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * sum_t w_t (pred_t - true_t)^2 / mean(true_t^2 over unmasked points),
 * w_t = dt_t / sum(dt). Masked points contribute nothing.
 */
inline Var curve_loss(std::span<const Var> predicted, const Curve& truth, const std::vector<bool>& mask = {},
                      std::optional<double> normalization = std::nullopt) {
  if (predicted.size() != truth.size() || truth.dt.size() != truth.size())
    throw GridMismatch("predicted and true curves are on different grids (" + std::to_string(predicted.size()) +
                       " vs " + std::to_string(truth.size()) + " points)");
  if (!mask.empty() && mask.size() != truth.size()) throw GridMismatch("mask length differs from the curve");
  double total_dt = 0.0;
  for (double d : truth.dt) total_dt += d;
  double sq = 0.0;
  std::size_t kept = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!mask.empty() && mask[t]) continue;
    sq += truth.stress[t] * truth.stress[t];
    ++kept;
  }
  double norm = normalization.value_or(kept ? sq / static_cast<double>(kept) : 1.0);
  if (!(norm > 0.0)) norm = 1.0;
  Var loss = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!mask.empty() && mask[t]) continue;
    const Var diff = predicted[t] - truth.stress[t];
    loss = loss + diff * diff * (truth.dt[t] / (total_dt * norm));
  }
  return loss;
}

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
};

/// Per-parameter settings the optimiser needs from the network layout.
struct ParamMeta {
  double lower;
  bool decays;
};

inline std::vector<ParamMeta> param_meta(const NetworkSet& set) {
  std::vector<ParamMeta> out;
  for (const ConstrainedNet* n : set.nets())
    for (std::size_t i = 0; i < n->parameter_count(); ++i) out.push_back({n->info(i).lower, n->info(i).decays});
  return out;
}

/**
 * One AdamW update followed by projection. Non-finite gradient entries skip
 * that parameter; the return value tells whether any were skipped.
 */
inline bool adamw_step(std::vector<double>& params, std::span<const double> grads, AdamState& st, double lr,
                       const TrainConfig& c, std::span<const ParamMeta> meta) {
  if (st.m.size() != params.size()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (grads.size() != params.size() || (!meta.empty() && meta.size() != params.size()))
    throw std::invalid_argument("optimizer buffers do not match the parameter vector");
  ++st.step;
  const double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(st.step));
  bool skipped = false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) {
      skipped = true;
      continue;
    }
    const bool decays = meta.empty() || meta[i].decays;
    if (decays) params[i] -= lr * c.weight_decay * params[i];
    st.m[i] = c.adam_beta1 * st.m[i] + (1.0 - c.adam_beta1) * g;
    st.v[i] = c.adam_beta2 * st.v[i] + (1.0 - c.adam_beta2) * g * g;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + c.adam_eps);
    if (!meta.empty() && params[i] < meta[i].lower) params[i] = meta[i].lower;
  }
  return skipped;
}

/// Training curves sharing one loading program.
struct CurveSet {
  std::vector<Curve> curves;
};

struct LossEvaluation {
  Var loss;
  std::vector<Simulation> simulations;
  bool ok = true;
  bool degenerate_hall_petch = false;
  std::string diagnostic;
};

/**
 * Simulates every curve with the current parameters and sums the curve
 * losses. With a tape, parameters are recorded first so their gradients are
 * the first parameter_count() adjoints.
 */
inline LossEvaluation evaluate_loss(const CurveSet& data, const NetworkSet& nets, const ParamViews& views,
                                    const LoadingProgram& prog, const ElasticParams& elastic, const TrainConfig& cfg,
                                    Tape* tape) {
  LossEvaluation ev;
  ev.loss = 0.0;
  SolverOptions opt;
  opt.tol = cfg.nr_tol;
  opt.max_iter = cfg.nr_max_iter;
  opt.tape = tape;
  for (const Curve& truth : data.curves) {
    std::optional<double> grain;
    if (nets.hall_petch) {
      if (!truth.grain_size_um) throw std::invalid_argument("curve '" + truth.name + "' has no grain size");
      grain = truth.grain_size_um;
    }
    NeuralFlow model(nets, views, grain);
    ev.degenerate_hall_petch = ev.degenerate_hall_petch || model.degenerate();
    Simulation sim = simulate_curve(prog, model, elastic, opt);
    if (!sim.ok) {
      ev.ok = false;
      ev.diagnostic = "curve '" + truth.name + "': " + sim.diagnostic;
      ev.simulations.push_back(std::move(sim));
      return ev;
    }
    std::vector<bool> mask;
    if (cfg.elastic_mask) {
      mask.resize(sim.curve.size());
      for (std::size_t t = 0; t < mask.size(); ++t) mask[t] = sim.curve.r[t] < cfg.r_min;
    }
    ev.loss = ev.loss + curve_loss(sim.stress, truth, mask, cfg.loss_normalization);
    sim.curve.grain_size_um = truth.grain_size_um;
    sim.curve.name = truth.name;
    ev.simulations.push_back(std::move(sim));
  }
  return ev;
}

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<LossRecord> losses;
  std::vector<Curve> predictions;
  std::map<int, long> nr_histogram;  // iterations -> step count over the whole run
  long nr_failures = 0;
  int failed_epochs = 0;
  int nonfinite_gradient_epochs = 0;
  bool degenerate_hall_petch = false;
  bool aborted = false;
  std::string diagnostic;
  double wall_seconds = 0.0;
};

struct TrainResult {
  NetworkSet nets;
  std::vector<LossRecord> losses;
  RunReport report;
};

/// Called after every completed epoch with the updated networks.
using EpochCallback = std::function<void(int epoch, const NetworkSet& nets, double loss)>;

inline TrainResult train(const CurveSet& data, NetworkSet nets, const LoadingProgram& prog,
                         const ElasticParams& elastic, const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  prog.validate();
  if (data.curves.empty()) throw std::invalid_argument("training set is empty");
  const std::size_t n_steps = prog.time_steps().size();
  for (const Curve& c : data.curves)
    if (c.size() != n_steps) throw GridMismatch("curve '" + c.name + "' is not on the loading program's grid");
  nets.check_constraints();

  TrainResult out;
  out.report.seed = cfg.seed;
  const auto meta = param_meta(nets);
  std::vector<double> params = nets.flat_parameters();
  AdamState adam;
  Tape tape;
  int consecutive_failures = 0;
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    tape.clear();
    ParamViews views = ParamViews::make(nets, &tape);
    LossEvaluation ev = evaluate_loss(data, nets, views, prog, elastic, cfg, &tape);
    for (const Simulation& s : ev.simulations)
      for (const StepStats& st : s.stats) ++out.report.nr_histogram[st.iterations];
    out.report.degenerate_hall_petch = out.report.degenerate_hall_petch || ev.degenerate_hall_petch;
    if (!ev.ok || !std::isfinite(ev.loss.value())) {
      ++out.report.failed_epochs;
      ++out.report.nr_failures;
      out.report.diagnostic = "epoch " + std::to_string(epoch) + ": " + (ev.ok ? "non-finite loss" : ev.diagnostic);
      if (++consecutive_failures >= 3) {
        out.report.aborted = true;
        break;
      }
      continue;
    }
    consecutive_failures = 0;
    const double lr = cosine_lr(epoch, cfg);
    const auto grads = tape.grad_prefix(ev.loss, static_cast<std::int32_t>(params.size()));
    if (adamw_step(params, grads, adam, lr, cfg, meta)) ++out.report.nonfinite_gradient_epochs;
    nets.set_flat_parameters(params);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.losses.push_back({epoch, ev.loss.value(), lr, wall});
    if (on_epoch) on_epoch(epoch, nets, ev.loss.value());
  }
  out.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.report.losses = out.losses;

  // Predictions with the final parameters.
  ParamViews views = ParamViews::make(nets, nullptr);
  LossEvaluation final_ev = evaluate_loss(data, nets, views, prog, elastic, cfg, nullptr);
  for (Simulation& s : final_ev.simulations) out.report.predictions.push_back(std::move(s.curve));
  if (!final_ev.ok && out.report.diagnostic.empty()) out.report.diagnostic = final_ev.diagnostic;
  out.nets = std::move(nets);
  return out;
}

/// Frozen-parameter prediction over a (typically longer) program.
inline Simulation extrapolate_strain(const NetworkSet& nets, const LoadingProgram& prog, const ElasticParams& elastic,
                                     std::optional<double> grain = std::nullopt, double nr_tol = 1e-6,
                                     int nr_max_iter = 25) {
  ParamViews views = ParamViews::make(nets, nullptr);
  NeuralFlow model(nets, views, grain);
  SolverOptions opt;
  opt.tol = nr_tol;
  opt.max_iter = nr_max_iter;
  return simulate_curve(prog, model, elastic, opt);
}

class DegenerateDesign : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct HallPetchTable {
  std::vector<double> grain_um;
  std::vector<double> stress_mpa;
  double slope = 0.0;  // least-squares d log(stress) / d log(d) over the fit range
  double fit_min_um = 0.0;
  double fit_max_um = 0.0;
};

/// Table 2 evaluation grid, um.
inline std::vector<double> default_hall_petch_grid() {
  return {0.5, 1.0, 2.1, 3.4, 5.0, 7.1, 10.0, 15.0, 20.0, 50.0, 100.0, 250.0, 500.0};
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2) throw DegenerateDesign("log-log fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 1e-24)) throw DegenerateDesign("log-log fit is rank deficient (all grain sizes equal)");
  return sxy / sxx;
}

/**
 * Evaluates the Hall-Petch network on a grid and fits the log-log slope over
 * the grid points inside [min, max] of the training grain sizes.
 */
inline HallPetchTable discover_hall_petch(const NetworkSet& nets, std::span<const double> training_grains,
                                          std::span<const double> grid) {
  if (!nets.hall_petch) throw std::invalid_argument("model has no Hall-Petch network");
  if (training_grains.size() < 2) throw DegenerateDesign("Hall-Petch discovery needs at least two training grain sizes");
  HallPetchTable t;
  t.fit_min_um = *std::min_element(training_grains.begin(), training_grains.end());
  t.fit_max_um = *std::max_element(training_grains.begin(), training_grains.end());
  if (!(t.fit_max_um > t.fit_min_um))
    throw DegenerateDesign("all training curves share one grain size; the Hall-Petch slope is undetermined");
  std::vector<double> fx, fy;
  for (double d : grid) {
    const double s = hallpetch_value(*nets.hall_petch, d);
    t.grain_um.push_back(d);
    t.stress_mpa.push_back(s);
    if (d >= t.fit_min_um * (1.0 - 1e-12) && d <= t.fit_max_um * (1.0 + 1e-12)) {
      fx.push_back(d);
      fy.push_back(s);
    }
  }
  t.slope = loglog_slope(fx, fy);
  return t;
}

}  // namespace nnevp

#endif  // NNEVP_TRAINER_HPP
