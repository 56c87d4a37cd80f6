#ifndef NNEVP_SOLVER_HPP
#define NNEVP_SOLVER_HPP

/**
 * @file solver.hpp
 *
 * Strain-driven material point under uniaxial tension with an implicit
 * (backward Euler) viscoplastic update solved by Newton-Raphson.
 *
 * Two loading modes are available:
 *   - TrueUniaxial: unknowns are the axial stress and the lateral total
 *     strain; residuals enforce Hooke consistency of sigma_11 and a
 *     traction-free lateral face. Reproduces the elastic slope E.
 *   - PrescribedLateral: lateral total strain rates are prescribed as -rate/2;
 *     unknowns are all six stress components, the first residual is the
 *     elastic-viscoplastic consistency of sigma_11 and the others pin the
 *     remaining components to zero. The elastic slope is then 2 mu.
 *
 * The Newton Jacobian comes from reverse sweeps over the recorded residual.
 * When a training tape is supplied, every iterate is recorded on it, with the
 * Jacobian held constant, so loss gradients flow through the unrolled solve.
 */

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnevp/autodiff.hpp"
#include "nnevp/curve.hpp"
#include "nnevp/elasticity.hpp"
#include "nnevp/reference_models.hpp"
#include "nnevp/tensor.hpp"

namespace nnevp {

enum class LoadingMode { TrueUniaxial, PrescribedLateral };
enum class Stepping { Fixed, Geometric };

struct LoadingProgram {
  double strain_rate = 1e-3;  // applied axial rate, 1/s
  double target_strain = 0.01;
  Stepping stepping = Stepping::Fixed;
  int steps = 50;
  double growth = 1.15;  // geometric ratio between consecutive steps
  LoadingMode mode = LoadingMode::TrueUniaxial;

  void validate() const {
    if (!(strain_rate > 0.0)) throw ParameterDomainError("applied strain rate must be positive");
    if (!(target_strain > 0.0)) throw ParameterDomainError("target strain must be positive");
    if (steps < 1) throw ParameterDomainError("step count must be at least 1");
    if (stepping == Stepping::Geometric && !(growth > 1.0))
      throw ParameterDomainError("geometric step growth must exceed 1");
  }

  double duration() const { return target_strain / strain_rate; }

  /// Step lengths; they sum to duration().
  std::vector<double> time_steps() const {
    validate();
    std::vector<double> dts(static_cast<std::size_t>(steps));
    if (stepping == Stepping::Fixed) {
      std::fill(dts.begin(), dts.end(), duration() / steps);
    } else {
      const double dt0 = duration() * (growth - 1.0) / (std::pow(growth, steps) - 1.0);
      for (int k = 0; k < steps; ++k) dts[static_cast<std::size_t>(k)] = dt0 * std::pow(growth, k);
    }
    return dts;
  }

  /// Axial strain at the end of every step.
  std::vector<double> strain_grid() const {
    std::vector<double> grid;
    double t = 0.0;
    for (double dt : time_steps()) {
      t += dt;
      grid.push_back(strain_rate * t);
    }
    if (!grid.empty()) grid.back() = target_strain;
    return grid;
  }

  /// Von Mises effective applied rate of diag(rate, -rate/2, -rate/2).
  double effective_rate() const { return strain_rate; }
  /// Frobenius norm of the same tensor.
  double frobenius_rate() const { return std::sqrt(1.5) * strain_rate; }
};

/// Reference-rate convention for power-law models.
enum class RateNorm { Effective, Frobenius };

inline double reference_rate(const LoadingProgram& prog, RateNorm norm) {
  return norm == RateNorm::Effective ? prog.effective_rate() : prog.frobenius_rate();
}

struct MaterialState {
  VarTensor strain = VarTensor::zero();
  VarTensor vp_strain = VarTensor::zero();
  VarTensor stress = VarTensor::zero();
  VarTensor flow = VarTensor::zero();  // viscoplastic rate of the last step
  Var r = 0.0;
  double time = 0.0;
};

struct StepStats {
  int iterations = 0;
  double residual_norm = 0.0;
  bool halved = false;
};

/// Viscoplastic flow law plugged into the solver.
class FlowModel {
 public:
  virtual ~FlowModel() = default;
  /// Resistance dividing the equivalent stress; evaluated once per step at
  /// the start-of-step accumulated plastic strain.
  virtual Var resistance(const Var& r) const = 0;
  /// Viscoplastic strain rate (tensor components) at the given stress.
  virtual VarTensor flow(const VarTensor& sigma, const Var& resistance) const = 0;
};

/**
 * 3/2 g(s_eq / R) s' / s_eq: the normality rule for a potential of
 * s_eq / R whose derivative with respect to the normalised stress is g.
 */
inline VarTensor flow_from_slope(const VarTensor& sigma, const Var& s_eq, const Var& g) {
  if (s_eq.value() == 0.0) return VarTensor::zero();
  const Var scale = g * 1.5 / s_eq;
  return scale * deviator(sigma);
}

class ZeroFlow final : public FlowModel {
 public:
  Var resistance(const Var&) const override { return 1.0; }
  VarTensor flow(const VarTensor&, const Var&) const override { return VarTensor::zero(); }
};

/// Power law with constant yield or Johnson-Cook hardening.
class PowerLawFlow final : public FlowModel {
 public:
  explicit PowerLawFlow(PowerLawParams p, std::optional<JohnsonCookParams> jc = std::nullopt,
                        double r_dot_ratio = 1.0, double extra_resistance = 0.0)
      : p_(p), jc_(jc), ratio_(r_dot_ratio), extra_(extra_resistance) {
    p_.validate();
    if (jc_) jc_->validate();
  }

  Var resistance(const Var& r) const override {
    if (jc_) return r_jc(r, *jc_, ratio_) + extra_;
    return Var(p_.sigma_y + extra_);
  }

  VarTensor flow(const VarTensor& sigma, const Var& resistance) const override {
    const Var s_eq = von_mises(sigma);
    if (s_eq.value() == 0.0) return VarTensor::zero();
    const Var g = pow(s_eq / resistance, p_.n) * p_.eps_dot_0;
    return flow_from_slope(sigma, s_eq, g);
  }

  const PowerLawParams& params() const { return p_; }

 private:
  PowerLawParams p_;
  std::optional<JohnsonCookParams> jc_;
  double ratio_;
  double extra_;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_norm(residual) {}
  double residual_norm;
};

struct SolverOptions {
  double tol = 1e-6;  // residual norm, MPa
  int max_iter = 25;
  Tape* tape = nullptr;  // record iterates for gradients when set
};

/// Everything the residual needs about the current step.
struct StepSetup {
  const MaterialState* state = nullptr;
  double dt = 0.0;
  double axial_strain = 0.0;   // end-of-step eps_11
  VarTensor prescribed_strain;  // end-of-step strain, prescribed-lateral mode
  Var resistance;
  LoadingMode mode = LoadingMode::TrueUniaxial;
};

inline int unknown_count(LoadingMode mode) { return mode == LoadingMode::TrueUniaxial ? 2 : 6; }

/// Stress and total strain represented by a vector of unknowns.
inline void unpack(const StepSetup& s, const std::vector<Var>& u, VarTensor& sigma, VarTensor& strain) {
  if (s.mode == LoadingMode::TrueUniaxial) {
    sigma = VarTensor::diag(u[0], 0.0, 0.0);
    strain = VarTensor::diag(s.axial_strain, u[1], u[1]);
  } else {
    for (std::size_t i = 0; i < 6; ++i) sigma.v[i] = u[i];
    strain = s.prescribed_strain;
  }
}

/**
 * Newton residual at the given unknowns.
 *
 * TrueUniaxial: (s - [C e]_11, [C e]_22), e = eps - eps_vp - flow(sigma) dt.
 * PrescribedLateral: (sigma_1 - [C e]_1, sigma_2, ..., sigma_6).
 */
inline std::vector<Var> residual(const std::vector<Var>& unknowns, const StepSetup& s, const FlowModel& model,
                                 const Stiffness66& c) {
  if (!(s.dt > 0.0)) throw ParameterDomainError("time step must be positive");
  VarTensor sigma, strain;
  unpack(s, unknowns, sigma, strain);
  const VarTensor f = model.flow(sigma, s.resistance);
  const VarTensor elastic = strain - s.state->vp_strain - s.dt * f;
  if (s.mode == LoadingMode::TrueUniaxial) {
    // Only rows 11 and 22 are needed; 33 follows by symmetry.
    Var s11 = 0.0, s22 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      s11 = s11 + elastic.v[j] * c(0, j);
      s22 = s22 + elastic.v[j] * c(1, j);
    }
    return {unknowns[0] - s11, s22};
  }
  std::vector<Var> out(6);
  Var s1 = 0.0;
  for (std::size_t j = 0; j < 6; ++j)
    if (c(0, j) != 0.0) s1 = s1 + elastic.v[j] * c(0, j);
  out[0] = unknowns[0] - s1;
  for (std::size_t k = 1; k < 6; ++k) out[k] = unknowns[k];
  return out;
}

namespace detail {

inline double norm2(const std::vector<Var>& x) {
  double s = 0.0;
  for (const Var& v : x) s += v.value() * v.value();
  return std::sqrt(s);
}

/// Inverse of a small dense matrix by Gauss-Jordan with partial pivoting.
inline std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (!(std::fabs(a[piv][col]) > 0.0) || !std::isfinite(a[piv][col]))
      throw SolverError("singular Newton Jacobian", std::nan(""));
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    const double d = a[col][col];
    for (std::size_t k = 0; k < n; ++k) {
      a[col][k] /= d;
      inv[col][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double f = a[r][col];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[col][k];
        inv[r][k] -= f * inv[col][k];
      }
    }
  }
  return inv;
}

}  // namespace detail

/**
 * Predictor: elastic response to the strain increment with the previous
 * step's viscoplastic rate carried forward. With zero flow this is the
 * classic elastic trial stress.
 */
inline std::vector<Var> predictor(const StepSetup& s, const Stiffness66& c, const ElasticParams& ep) {
  const MaterialState& st = *s.state;
  SymTensor3 inelastic = values(st.vp_strain) + s.dt * values(st.flow);
  if (s.mode == LoadingMode::TrueUniaxial) {
    const double axial = ep.E * (s.axial_strain - inelastic[0]);
    const double lateral = inelastic[1] - ep.nu * axial / ep.E;
    return {axial, lateral};
  }
  const SymTensor3 trial = hooke(c, values(s.prescribed_strain) - inelastic);
  std::vector<Var> u(6);
  for (std::size_t i = 0; i < 6; ++i) u[i] = trial[i];
  return u;
}

struct NewtonResult {
  std::vector<Var> unknowns;
  StepStats stats;
};

/**
 * Newton-Raphson on the step residual.
 *
 * At least one update is always taken, so the recorded solution depends on
 * the parameters through a Newton step and not only through the predictor.
 * A backtracking factor is applied when an update increases the residual
 * norm.
 */
inline NewtonResult nr_solve(const StepSetup& s, const FlowModel& model, const Stiffness66& c,
                             const ElasticParams& ep, const SolverOptions& opt) {
  const int n = unknown_count(s.mode);
  std::vector<Var> u = predictor(s, c, ep);
  Tape scratch;
  Tape* tape = opt.tape;

  auto evaluate = [&](const std::vector<Var>& point, std::vector<Var>& handles, std::vector<Var>& res,
                      std::vector<std::vector<double>>* jac) {
    handles.resize(static_cast<std::size_t>(n));
    if (tape) {
      for (int k = 0; k < n; ++k) handles[static_cast<std::size_t>(k)] = tape->copy(point[static_cast<std::size_t>(k)]);
      res = residual(handles, s, model, c);
      if (jac) *jac = tape->jacobian(res, handles);
    } else {
      scratch.clear();
      for (int k = 0; k < n; ++k) handles[static_cast<std::size_t>(k)] = scratch.leaf(point[static_cast<std::size_t>(k)].value());
      res = residual(handles, s, model, c);
      if (jac) *jac = scratch.jacobian(res, handles);
      // Values only leave the scratch tape.
      for (auto& h : handles) h = Var(h.value());
      for (auto& r : res) r = Var(r.value());
    }
  };

  std::vector<Var> handles, res;
  std::vector<std::vector<double>> jac;
  evaluate(u, handles, res, &jac);
  double norm = detail::norm2(res);

  StepStats stats;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const auto jinv = detail::invert(jac);
    std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) delta[static_cast<std::size_t>(k)] += jinv[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] * res[static_cast<std::size_t>(l)].value();

    double alpha = 1.0;
    std::vector<Var> next(static_cast<std::size_t>(n)), next_handles, next_res;
    std::vector<std::vector<double>> next_jac;
    double next_norm = 0.0;
    for (int backtrack = 0;; ++backtrack) {
      for (int k = 0; k < n; ++k) {
        // u_k - alpha * sum_l Jinv_kl X_l, recorded with the Jacobian frozen.
        Var step = 0.0;
        for (int l = 0; l < n; ++l) {
          const double w = jinv[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
          if (w != 0.0) step = step + res[static_cast<std::size_t>(l)] * (alpha * w);
        }
        next[static_cast<std::size_t>(k)] = handles[static_cast<std::size_t>(k)] - step;
      }
      evaluate(next, next_handles, next_res, &next_jac);
      next_norm = detail::norm2(next_res);
      const bool finite = std::isfinite(next_norm);
      if ((finite && next_norm < norm) || next_norm < opt.tol || backtrack >= 20) break;
      alpha *= 0.5;
    }
    if (!std::isfinite(next_norm)) throw SolverError("non-finite Newton residual", next_norm);
    u = next;
    handles = std::move(next_handles);
    res = std::move(next_res);
    jac = std::move(next_jac);
    norm = next_norm;
    stats.iterations = it;
    stats.residual_norm = norm;
    if (norm < opt.tol) return {tape ? handles : u, stats};
  }
  throw SolverError("Newton-Raphson did not converge in " + std::to_string(opt.max_iter) +
                        " iterations (residual " + std::to_string(norm) + ")",
                    norm);
}

/// One time step: strain update, stress solve, viscoplastic update.
inline MaterialState advance(const MaterialState& state, double dt, const LoadingProgram& prog,
                             const FlowModel& model, const Stiffness66& c, const ElasticParams& ep,
                             const SolverOptions& opt, StepStats* stats_out = nullptr) {
  StepSetup s;
  s.state = &state;
  s.dt = dt;
  s.mode = prog.mode;
  s.axial_strain = state.strain[0].value() + prog.strain_rate * dt;
  if (prog.mode == LoadingMode::PrescribedLateral) {
    const double lat = -0.5 * prog.strain_rate * dt;
    s.prescribed_strain = state.strain + VarTensor::diag(prog.strain_rate * dt, lat, lat);
  }
  s.resistance = model.resistance(state.r);

  NewtonResult nr = nr_solve(s, model, c, ep, opt);
  MaterialState next;
  unpack(s, nr.unknowns, next.stress, next.strain);
  if (prog.mode == LoadingMode::PrescribedLateral) next.strain = s.prescribed_strain;
  next.flow = model.flow(next.stress, s.resistance);
  next.vp_strain = state.vp_strain + dt * next.flow;
  next.r = state.r + sqrt(contract(next.flow, next.flow) * (2.0 / 3.0)) * dt;
  next.time = state.time + dt;
  if (stats_out) *stats_out = nr.stats;
  return next;
}

/// Simulated curve with recorded stresses for loss evaluation.
struct Simulation {
  Curve curve;
  std::vector<Var> stress;  // axial stress per step, on the tape when recording
  std::vector<Var> r;
  std::vector<StepStats> stats;
  std::vector<SymTensor3> vp_strain;
  std::vector<SymTensor3> stress_tensor;
  bool ok = true;
  std::string diagnostic;
};

/**
 * Runs the loading program. A step whose Newton solve fails is retried once
 * as two half steps; a second failure stops the run and returns the partial
 * curve with ok == false.
 */
inline Simulation simulate_curve(const LoadingProgram& prog, const FlowModel& model, const ElasticParams& ep,
                                 const SolverOptions& opt) {
  prog.validate();
  const Stiffness66 c = build_stiffness(ep);
  Simulation sim;
  MaterialState state;
  for (double dt : prog.time_steps()) {
    StepStats stats;
    try {
      state = advance(state, dt, prog, model, c, ep, opt, &stats);
    } catch (const SolverError& first) {
      try {
        StepStats a, b;
        MaterialState half = advance(state, 0.5 * dt, prog, model, c, ep, opt, &a);
        state = advance(half, 0.5 * dt, prog, model, c, ep, opt, &b);
        stats.iterations = a.iterations + b.iterations;
        stats.residual_norm = b.residual_norm;
        stats.halved = true;
      } catch (const SolverError& second) {
        sim.ok = false;
        sim.diagnostic = "step at t=" + std::to_string(state.time) + " failed after halving: " + second.what();
        return sim;
      }
    }
    sim.curve.strain.push_back(state.strain[0].value());
    sim.curve.stress.push_back(state.stress[0].value());
    sim.curve.time.push_back(state.time);
    sim.curve.dt.push_back(dt);
    sim.curve.r.push_back(state.r.value());
    sim.curve.nr_iters.push_back(stats.iterations);
    sim.stress.push_back(state.stress[0]);
    sim.r.push_back(state.r);
    sim.stats.push_back(stats);
    sim.vp_strain.push_back(values(state.vp_strain));
    sim.stress_tensor.push_back(values(state.stress));
  }
  sim.curve.strain_rate = prog.strain_rate;
  return sim;
}

}  // namespace nnevp

#endif  // NNEVP_SOLVER_HPP
