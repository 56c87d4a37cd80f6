#ifndef NNEVP_NEURAL_MODEL_HPP
#define NNEVP_NEURAL_MODEL_HPP

/**
 * @file neural_model.hpp
 *
 * The network-backed flow rule. The dual potential takes the single input
 *
 *   x = s_eq / sigma_ref                    (perfect viscoplasticity)
 *   x = s_eq / NN_R(r)                      (isotropic hardening)
 *   x = s_eq / (NN_R(r) + NN_HP(d_grain))   (grain-size aware)
 *
 * and the viscoplastic rate is rate_scale * dphi/dx * d s_eq / d sigma, i.e.
 * the potential's gradient with respect to the normalised stress, with
 * phi(x) = NN(x) - NN(0) - NN'(0) x.
 */

#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "nnevp/networks.hpp"
#include "nnevp/solver.hpp"

namespace nnevp {

enum class Experiment { Perfect, Hardening, HallPetch };

/// The networks of one model plus the scales tying them to physical units.
struct NetworkSet {
  ConstrainedNet potential;
  std::optional<ConstrainedNet> hardening;
  std::optional<ConstrainedNet> hall_petch;
  double rate_scale = 1e-3;     // 1/s, multiplies the potential slope
  double stress_scale = 100.0;  // MPa, divides s_eq without a hardening net

  Experiment experiment() const {
    if (hall_petch) return Experiment::HallPetch;
    if (hardening) return Experiment::Hardening;
    return Experiment::Perfect;
  }

  std::size_t parameter_count() const {
    return potential.parameter_count() + (hardening ? hardening->parameter_count() : 0) +
           (hall_petch ? hall_petch->parameter_count() : 0);
  }

  /// Nets in the fixed order potential, hardening, Hall-Petch.
  std::vector<ConstrainedNet*> nets() {
    std::vector<ConstrainedNet*> out{&potential};
    if (hardening) out.push_back(&*hardening);
    if (hall_petch) out.push_back(&*hall_petch);
    return out;
  }
  std::vector<const ConstrainedNet*> nets() const {
    std::vector<const ConstrainedNet*> out{&potential};
    if (hardening) out.push_back(&*hardening);
    if (hall_petch) out.push_back(&*hall_petch);
    return out;
  }

  std::vector<double> flat_parameters() const {
    std::vector<double> out;
    for (const ConstrainedNet* n : nets()) out.insert(out.end(), n->parameters().begin(), n->parameters().end());
    return out;
  }

  void set_flat_parameters(std::span<const double> p) {
    if (p.size() != parameter_count()) throw std::invalid_argument("flat parameter vector has the wrong length");
    std::size_t off = 0;
    for (ConstrainedNet* n : nets()) {
      std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
                p.begin() + static_cast<std::ptrdiff_t>(off + n->parameter_count()), n->parameters().begin());
      off += n->parameter_count();
    }
  }

  void project() {
    for (ConstrainedNet* n : nets()) n->project();
  }

  void check_constraints() const {
    for (const ConstrainedNet* n : nets()) n->check_constraints();
  }

  bool same_architecture(const NetworkSet& o) const {
    if (!potential.same_architecture(o.potential)) return false;
    if (hardening.has_value() != o.hardening.has_value()) return false;
    if (hall_petch.has_value() != o.hall_petch.has_value()) return false;
    if (hardening && !hardening->same_architecture(*o.hardening)) return false;
    if (hall_petch && !hall_petch->same_architecture(*o.hall_petch)) return false;
    return true;
  }
};

struct ArchitectureSpec {
  std::vector<int> hidden{20, 20};
  HardeningActivationMix mix{};
  bool nonneg_potential_bias = false;
  // Potential initialisation, see ConstrainedNet::initialize_sharp.
  double kink_sharpness = 20.0;
  double kink_span = 1.2;
  double deep_bias = 20.0;
  double weight_max = 3.0;
  // Stored weight range of the hardening and Hall-Petch nets.
  double hardening_weight_max = 1.0;
  // Upper bound on the initial relative rise R(strain_scale) / R(0) - 1.
  double initial_hardening = 0.05;
  // Hall-Petch experiment: initial share of the stress scale carried by the
  // grain-size term at d = grain scale; the hardening net starts with the rest.
  double hall_petch_share = 0.9;
};

/// Sets the output scale so the potential slope at x = 1 is 1.
inline void normalize_potential_slope(ConstrainedNet& potential) {
  potential.output_scale = 1.0;
  const auto p = constant_params(potential);
  const double s = potential_slope(potential, p, Var(1.0)).value();
  if (s > 0.0 && std::isfinite(s)) potential.output_scale = 1.0 / s;
}

struct ModelScales {
  double rate = 1e-3;     // 1/s
  double stress = 100.0;  // MPa
  double strain = 0.01;   // input scale of the hardening net
  double grain = 1.0;     // um, input scale of the Hall-Petch net
};

/**
 * Builds and initialises the networks for an experiment.
 *
 * Output scales are fixed from the initial networks: R(0) equals the stress
 * scale, or for the Hall-Petch experiment R(0) + HP(grain scale) does, with
 * hall_petch_share of it in the grain-size term.
 */
template <class Rng>
NetworkSet make_network_set(Experiment e, const ArchitectureSpec& arch, const ModelScales& scales, Rng& rng) {
  NetworkSet set;
  set.rate_scale = scales.rate;
  set.stress_scale = scales.stress;
  set.potential = ConstrainedNet(ConstraintProfile::ConvexIncreasing, arch.hidden, {}, arch.nonneg_potential_bias);
  set.potential.initialize_sharp(rng, arch.kink_sharpness, arch.kink_span, arch.deep_bias, arch.weight_max);
  normalize_potential_slope(set.potential);
  if (e != Experiment::Perfect) {
    set.hardening = ConstrainedNet(ConstraintProfile::MonotoneIncreasing, arch.hidden, arch.mix);
    set.hardening->initialize(rng, arch.hardening_weight_max);
    // Initial resistance R(0) equals the stress scale and rises by at most
    // initial_hardening over one strain_scale; the output bias absorbs the rest.
    set.hardening->output_scale = 1.0;
    set.hardening->input_scale = 1.0;
    const double rise = hardening_value(*set.hardening, 1.0) - hardening_value(*set.hardening, 0.0);
    const double base = hardening_value(*set.hardening, 0.0);
    if (rise > arch.initial_hardening * base) {
      auto& b_out = set.hardening->parameters()[set.hardening->bias_offset(set.hardening->output_layer())];
      b_out += rise / arch.initial_hardening - base;
    }
    set.hardening->input_scale = scales.strain;
    const double r0 = hardening_value(*set.hardening, 0.0);
    set.hardening->output_scale = r0 > 0.0 ? scales.stress / r0 : scales.stress;
  }
  if (e == Experiment::HallPetch) {
    set.hall_petch = ConstrainedNet(ConstraintProfile::ReciprocalDecreasing, arch.hidden);
    set.hall_petch->input_scale = scales.grain;
    set.hall_petch->initialize(rng, arch.hardening_weight_max);
    set.hall_petch->output_scale = 1.0;
    set.hall_petch->output_scale = arch.hall_petch_share * scales.stress / hallpetch_value(*set.hall_petch, scales.grain);
    set.hardening->output_scale *= 1.0 - arch.hall_petch_share;
  }
  return set;
}

/// Parameters of a NetworkSet as Vars, split per network.
struct ParamViews {
  ParamViews() = default;
  ParamViews(const ParamViews&) = delete;  // spans point into all
  ParamViews& operator=(const ParamViews&) = delete;
  ParamViews(ParamViews&&) = default;
  ParamViews& operator=(ParamViews&&) = default;

  std::vector<Var> all;
  std::span<const Var> potential, hardening, hall_petch;

  static ParamViews make(const NetworkSet& set, Tape* tape) {
    ParamViews v;
    const auto flat = set.flat_parameters();
    v.all.reserve(flat.size());
    for (double p : flat) v.all.push_back(tape ? tape->leaf(p) : Var(p));
    v.bind(set);
    return v;
  }

  void bind(const NetworkSet& set) {
    std::size_t off = 0;
    potential = std::span<const Var>(all).subspan(off, set.potential.parameter_count());
    off += set.potential.parameter_count();
    if (set.hardening) {
      hardening = std::span<const Var>(all).subspan(off, set.hardening->parameter_count());
      off += set.hardening->parameter_count();
    }
    if (set.hall_petch) hall_petch = std::span<const Var>(all).subspan(off, set.hall_petch->parameter_count());
  }
};

/**
 * Viscoplastic rate from the networks at stress sigma, accumulated plastic
 * strain r and optional grain size.
 */
inline VarTensor viscoplastic_flow_nn(const VarTensor& sigma, const Var& r, std::optional<double> d_grain,
                                      const NetworkSet& nets, const ParamViews& p) {
  if (nets.hall_petch.has_value() != d_grain.has_value())
    throw std::invalid_argument("grain size must be given exactly when a Hall-Petch network is present");
  Var denom = nets.stress_scale;
  if (nets.hardening) {
    denom = hardening_forward(*nets.hardening, p.hardening, r);
    if (nets.hall_petch) denom = denom + hallpetch_forward(*nets.hall_petch, p.hall_petch, Var(*d_grain));
  }
  const Var s_eq = von_mises(sigma);
  if (s_eq.value() == 0.0) return VarTensor::zero();
  const Var g = potential_slope(nets.potential, p.potential, s_eq / denom) * nets.rate_scale;
  return flow_from_slope(sigma, s_eq, g);
}

/// Solver flow model backed by a NetworkSet for one curve.
class NeuralFlow final : public FlowModel {
 public:
  NeuralFlow(const NetworkSet& nets, const ParamViews& params, std::optional<double> d_grain)
      : nets_(nets), p_(params), d_grain_(d_grain) {
    if (nets_.hall_petch.has_value() != d_grain_.has_value())
      throw std::invalid_argument("grain size must be given exactly when a Hall-Petch network is present");
    if (nets_.hall_petch) hp_ = hallpetch_forward(*nets_.hall_petch, p_.hall_petch, Var(*d_grain_), &degenerate_);
    origin_slope_ = potential_origin_slope(nets_.potential, p_.potential);
  }

  Var resistance(const Var& r) const override {
    if (!nets_.hardening) return nets_.stress_scale;
    Var R = hardening_forward(*nets_.hardening, p_.hardening, r);
    if (nets_.hall_petch) R = R + hp_;
    return R;
  }

  VarTensor flow(const VarTensor& sigma, const Var& resistance) const override {
    const Var s_eq = von_mises(sigma);
    if (s_eq.value() == 0.0) return VarTensor::zero();
    const Var g = potential_slope(nets_.potential, p_.potential, s_eq / resistance, origin_slope_) * nets_.rate_scale;
    return flow_from_slope(sigma, s_eq, g);
  }

  /// True when the Hall-Petch inner network hit the reciprocal floor.
  bool degenerate() const { return degenerate_; }

 private:
  const NetworkSet& nets_;
  const ParamViews& p_;
  std::optional<double> d_grain_;
  Var hp_;
  Var origin_slope_;
  bool degenerate_ = false;
};

}  // namespace nnevp

#endif  // NNEVP_NEURAL_MODEL_HPP
