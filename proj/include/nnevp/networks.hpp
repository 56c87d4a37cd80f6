#ifndef NNEVP_NETWORKS_HPP
#define NNEVP_NETWORKS_HPP

/**
 * @file networks.hpp
 *
 * Constrained scalar feedforward networks for the dual potential, the
 * isotropic hardening resistance and the Hall-Petch contribution.
 *
 * All three are 1 -> n_1 -> ... -> n_L -> 1 networks with nonnegative
 * weights. Their properties follow from the activations:
 *   - potential: adaptive Softplus, convex and nondecreasing, so the network is
 *     convex and nondecreasing in its input; the value and tangent at 0 are
 *     subtracted on the output so the potential and its slope vanish at the
 *     origin.
 *   - hardening: mixtures of ReLU, adaptive logistic and adaptive tanh, all
 *     nondecreasing, with nonnegative biases so every activation input is
 *     nonnegative and the output stays positive.
 *   - Hall-Petch: tanh hidden layers; the reciprocal of the positive,
 *     nondecreasing inner network is positive and nonincreasing.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnevp/autodiff.hpp"

namespace nnevp {

enum class ConstraintProfile { ConvexIncreasing, MonotoneIncreasing, ReciprocalDecreasing };

/// Activation pairs for the hardening network.
enum class MixPair { ReluLogistic, ReluTanh, LogisticTanh };

struct HardeningActivationMix {
  MixPair pair = MixPair::ReluLogistic;
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  bool trainable = false;

  void validate() const {
    if (!(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1 + alpha2 > 0.0))
      throw std::invalid_argument("activation mix weights must be nonnegative with a positive sum");
  }
};

std::string to_string(ConstraintProfile p);
std::string to_string(MixPair p);
ConstraintProfile profile_from_string(const std::string& s);
MixPair mix_pair_from_string(const std::string& s);

class ConstraintViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr double kBetaMin = 1e-3;
inline constexpr double kReciprocalFloor = 1e-12;

enum class ParamKind : std::uint8_t { Weight, Bias, Beta, Alpha };

struct ParamInfo {
  ParamKind kind;
  double lower;  // -inf when unconstrained
  bool decays;
};

class ConstrainedNet {
 public:
  ConstrainedNet() = default;

  /**
   * hidden: neuron count per hidden layer. For the potential, hidden biases
   * are sign-free unless nonneg_hidden_bias is set; this keeps convexity and
   * monotonicity while letting the Softplus units work in their exponential
   * regime.
   */
  ConstrainedNet(ConstraintProfile profile, std::vector<int> hidden, HardeningActivationMix mix = {},
                 bool nonneg_hidden_bias = false)
      : profile_(profile), mix_(mix), nonneg_hidden_bias_(nonneg_hidden_bias) {
    if (hidden.empty()) throw std::invalid_argument("network needs at least one hidden layer");
    for (int n : hidden)
      if (n < 1) throw std::invalid_argument("hidden layer sizes must be positive");
    if (profile_ == ConstraintProfile::MonotoneIncreasing) mix_.validate();
    sizes_.push_back(1);
    sizes_.insert(sizes_.end(), hidden.begin(), hidden.end());
    sizes_.push_back(1);
    build_layout();
  }

  ConstraintProfile profile() const { return profile_; }
  const HardeningActivationMix& mix() const { return mix_; }
  const std::vector<int>& sizes() const { return sizes_; }
  int hidden_layers() const { return static_cast<int>(sizes_.size()) - 2; }
  bool nonneg_hidden_bias() const { return nonneg_hidden_bias_; }

  /// Input is divided by input_scale; output is multiplied (or, for the
  /// reciprocal profile, divided into) output_scale.
  double input_scale = 1.0;
  double output_scale = 1.0;

  std::size_t parameter_count() const { return params_.size(); }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  const ParamInfo& info(std::size_t i) const { return info_[i]; }

  // Layout: layer l in [1, L+1] maps sizes_[l-1] -> sizes_[l].
  std::size_t weight_offset(int layer) const { return w_off_[static_cast<std::size_t>(layer - 1)]; }
  std::size_t bias_offset(int layer) const { return b_off_[static_cast<std::size_t>(layer - 1)]; }
  bool has_beta() const { return profile_ != ConstraintProfile::ReciprocalDecreasing; }
  std::size_t beta_offset(int hidden_layer) const { return beta_off_ + static_cast<std::size_t>(hidden_layer - 1); }
  bool has_alpha() const { return alpha_off_ != npos; }
  std::size_t alpha_offset() const { return alpha_off_; }
  int output_layer() const { return static_cast<int>(sizes_.size()) - 1; }

  /**
   * Stored weights uniform in [0, weight_max], biases in [0, 0.1], beta = 1.
   * With the fan-in factor of raw_forward the effective weights of deeper
   * layers are weight_max / fan_in at most.
   */
  template <class Rng>
  void initialize(Rng& rng, double weight_max = 1.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int l = 1; l <= output_layer(); ++l) {
      const int fan_out = sizes_[static_cast<std::size_t>(l)];
      const int fan_in = sizes_[static_cast<std::size_t>(l - 1)];
      const double wmax = weight_max;
      for (int k = 0; k < fan_out * fan_in; ++k) params_[weight_offset(l) + static_cast<std::size_t>(k)] = wmax * unit(rng);
      for (int k = 0; k < fan_out; ++k) params_[bias_offset(l) + static_cast<std::size_t>(k)] = 0.1 * unit(rng);
    }
    reset_adaptive();
  }

  /**
   * Potential initialisation for sharp flow transitions. First-layer units
   * get Softplus kinks on a grid: 4 sharpness levels in
   * [0.1, 1] * kink_sharpness crossed with kink positions spread over
   * [0, kink_span]. Deeper hidden biases are drawn in [-deep_bias, 0] so some
   * units start in the exponential part of the Softplus. Other stored
   * weights are uniform in [0, weight_max].
   */
  template <class Rng>
  void initialize_sharp(Rng& rng, double kink_sharpness, double kink_span, double deep_bias, double weight_max) {
    if (profile_ != ConstraintProfile::ConvexIncreasing || nonneg_hidden_bias_) {
      initialize(rng, weight_max);
      return;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n1 = sizes_[1];
    const int levels = std::min(4, n1);
    const int positions = (n1 + levels - 1) / levels;
    for (int j = 0; j < n1; ++j) {
      const double w = kink_sharpness * (0.1 + 0.9 * (j % levels + 0.5) / levels);
      const double c = kink_span * (j / levels + 0.5) / positions;
      params_[weight_offset(1) + static_cast<std::size_t>(j)] = w;
      params_[bias_offset(1) + static_cast<std::size_t>(j)] = -w * c;
    }
    for (int l = 2; l <= output_layer(); ++l) {
      const int fan_out = sizes_[static_cast<std::size_t>(l)];
      const int fan_in = sizes_[static_cast<std::size_t>(l - 1)];
      for (int k = 0; k < fan_out * fan_in; ++k)
        params_[weight_offset(l) + static_cast<std::size_t>(k)] = weight_max * unit(rng);
      const bool hidden = l < output_layer();
      for (int k = 0; k < fan_out; ++k)
        params_[bias_offset(l) + static_cast<std::size_t>(k)] = hidden ? -deep_bias * unit(rng) : 0.1 * unit(rng);
    }
    reset_adaptive();
  }

  /// beta = 1 and alpha from the configured mix.
  void reset_adaptive() {
    if (has_beta())
      for (int l = 1; l <= hidden_layers(); ++l) params_[beta_offset(l)] = 1.0;
    if (has_alpha()) {
      params_[alpha_off_] = mix_.alpha1;
      params_[alpha_off_ + 1] = mix_.alpha2;
    }
  }

  /// Clamps every constrained parameter onto its feasible set.
  void project() {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i] < info_[i].lower) params_[i] = info_[i].lower;
  }

  /// Throws ConstraintViolation when a constrained parameter is infeasible.
  void check_constraints(std::span<const double> p) const {
    if (p.size() != params_.size()) throw ConstraintViolation("parameter vector has the wrong length");
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!(p[i] >= info_[i].lower))
        throw ConstraintViolation(to_string(profile_) + " network parameter " + std::to_string(i) +
                                  " violates its lower bound");
  }
  void check_constraints() const { check_constraints(params_); }

  bool same_architecture(const ConstrainedNet& o) const {
    return profile_ == o.profile_ && sizes_ == o.sizes_ && nonneg_hidden_bias_ == o.nonneg_hidden_bias_ &&
           (profile_ != ConstraintProfile::MonotoneIncreasing ||
            (mix_.pair == o.mix_.pair && mix_.trainable == o.mix_.trainable));
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  void build_layout() {
    params_.clear();
    info_.clear();
    w_off_.clear();
    b_off_.clear();
    const double inf = -std::numeric_limits<double>::infinity();
    for (int l = 1; l <= output_layer(); ++l) {
      const auto fan_out = static_cast<std::size_t>(sizes_[static_cast<std::size_t>(l)]);
      const auto fan_in = static_cast<std::size_t>(sizes_[static_cast<std::size_t>(l - 1)]);
      w_off_.push_back(params_.size());
      for (std::size_t k = 0; k < fan_out * fan_in; ++k) push(ParamInfo{ParamKind::Weight, 0.0, true});
      b_off_.push_back(params_.size());
      const bool hidden = l < output_layer();
      const bool free_bias = profile_ == ConstraintProfile::ConvexIncreasing && hidden && !nonneg_hidden_bias_;
      for (std::size_t k = 0; k < fan_out; ++k) push(ParamInfo{ParamKind::Bias, free_bias ? inf : 0.0, true});
    }
    beta_off_ = params_.size();
    if (has_beta())
      for (int l = 1; l <= hidden_layers(); ++l) push(ParamInfo{ParamKind::Beta, kBetaMin, false});
    alpha_off_ = npos;
    if (profile_ == ConstraintProfile::MonotoneIncreasing && mix_.trainable) {
      alpha_off_ = params_.size();
      push(ParamInfo{ParamKind::Alpha, 0.0, false});
      push(ParamInfo{ParamKind::Alpha, 0.0, false});
    }
  }

  void push(ParamInfo i) {
    params_.push_back(0.0);
    info_.push_back(i);
  }

  ConstraintProfile profile_ = ConstraintProfile::ConvexIncreasing;
  HardeningActivationMix mix_{};
  bool nonneg_hidden_bias_ = false;
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<ParamInfo> info_;
  std::vector<std::size_t> w_off_, b_off_;
  std::size_t beta_off_ = 0;
  std::size_t alpha_off_ = npos;
};

inline std::string to_string(ConstraintProfile p) {
  switch (p) {
    case ConstraintProfile::ConvexIncreasing: return "convex-increasing";
    case ConstraintProfile::MonotoneIncreasing: return "monotone-increasing";
    case ConstraintProfile::ReciprocalDecreasing: return "reciprocal-decreasing";
  }
  return "unknown";
}

inline std::string to_string(MixPair p) {
  switch (p) {
    case MixPair::ReluLogistic: return "relu+logistic";
    case MixPair::ReluTanh: return "relu+tanh";
    case MixPair::LogisticTanh: return "logistic+tanh";
  }
  return "unknown";
}

inline ConstraintProfile profile_from_string(const std::string& s) {
  if (s == "convex-increasing") return ConstraintProfile::ConvexIncreasing;
  if (s == "monotone-increasing") return ConstraintProfile::MonotoneIncreasing;
  if (s == "reciprocal-decreasing") return ConstraintProfile::ReciprocalDecreasing;
  throw std::invalid_argument("unknown constraint profile '" + s + "'");
}

inline MixPair mix_pair_from_string(const std::string& s) {
  if (s == "relu+logistic") return MixPair::ReluLogistic;
  if (s == "relu+tanh") return MixPair::ReluTanh;
  if (s == "logistic+tanh") return MixPair::LogisticTanh;
  throw std::invalid_argument("unknown activation mix '" + s + "'");
}

/// Parameters as constants, for evaluation without recording.
inline std::vector<Var> constant_params(const ConstrainedNet& net) {
  return {net.parameters().begin(), net.parameters().end()};
}

/// Parameters as fresh leaves on a tape.
inline std::vector<Var> leaf_params(const ConstrainedNet& net, Tape& tape) {
  std::vector<Var> out;
  out.reserve(net.parameter_count());
  for (double p : net.parameters()) out.push_back(tape.leaf(p));
  return out;
}

/// Network output and its derivative with respect to the (unscaled) input.
struct ValueSlope {
  Var value;
  Var slope;
};

namespace detail {

struct Activation {
  Var value;
  Var slope;  // dF/dz
};

inline Activation hidden_activation(const ConstrainedNet& net, std::span<const Var> p, int layer, const Var& z,
                                    bool need_slope) {
  switch (net.profile()) {
    case ConstraintProfile::ConvexIncreasing: {
      // (1/beta) log(1 + e^z)
      // (1/beta) log(1 + e^(beta z))
      const Var beta = p[net.beta_offset(layer)];
      const Var bz = beta * z;
      return {softplus(bz) / beta, need_slope ? sigmoid(bz) : Var(0.0)};
    }
    case ConstraintProfile::MonotoneIncreasing: {
      const Var beta = p[net.beta_offset(layer)];
      const Var a1 = net.has_alpha() ? p[net.alpha_offset()] : Var(net.mix().alpha1);
      const Var a2 = net.has_alpha() ? p[net.alpha_offset() + 1] : Var(net.mix().alpha2);
      Var first, second, d_first, d_second;
      const Var bz = beta * z;
      switch (net.mix().pair) {
        case MixPair::ReluLogistic: {
          first = relu(z);
          second = sigmoid(bz);
          if (need_slope) {
            d_first = z.value() > 0.0 ? Var(1.0) : Var(0.0);
            d_second = second * (Var(1.0) - second) * beta;
          }
          break;
        }
        case MixPair::ReluTanh: {
          first = relu(z);
          second = tanh(bz);
          if (need_slope) {
            d_first = z.value() > 0.0 ? Var(1.0) : Var(0.0);
            d_second = (Var(1.0) - second * second) * beta;
          }
          break;
        }
        case MixPair::LogisticTanh: {
          first = sigmoid(bz);
          second = tanh(bz);
          if (need_slope) {
            d_first = first * (Var(1.0) - first) * beta;
            d_second = (Var(1.0) - second * second) * beta;
          }
          break;
        }
      }
      Var v = a1 * first + a2 * second;
      return {v, need_slope ? a1 * d_first + a2 * d_second : Var(0.0)};
    }
    case ConstraintProfile::ReciprocalDecreasing: {
      const Var v = tanh(z);
      return {v, need_slope ? Var(1.0) - v * v : Var(0.0)};
    }
  }
  return {};
}

/**
 * Raw network on an already scaled input; slope is d(out)/d(input).
 * Pre-activations are b + (1/fan_in) sum W a, so stored weights stay O(1)
 * and an optimiser step moves every layer by a comparable relative amount.
 */
inline ValueSlope raw_forward(const ConstrainedNet& net, std::span<const Var> p, const Var& x, bool need_slope) {
  std::vector<Var> a{x};
  std::vector<Var> s{Var(1.0)};
  std::vector<Var> next_a, next_s;
  const int last = net.output_layer();
  for (int l = 1; l <= last; ++l) {
    const auto fan_out = static_cast<std::size_t>(net.sizes()[static_cast<std::size_t>(l)]);
    const auto fan_in = static_cast<std::size_t>(net.sizes()[static_cast<std::size_t>(l - 1)]);
    const std::size_t wo = net.weight_offset(l);
    const std::size_t bo = net.bias_offset(l);
    next_a.assign(fan_out, Var(0.0));
    next_s.assign(fan_out, Var(0.0));
    const double inv_fan_in = 1.0 / static_cast<double>(fan_in);
    for (std::size_t j = 0; j < fan_out; ++j) {
      Var sum = Var(0.0);
      Var dsum = Var(0.0);
      for (std::size_t i = 0; i < fan_in; ++i) {
        const Var& w = p[wo + j * fan_in + i];
        sum = (i == 0) ? w * a[i] : sum + w * a[i];
        if (need_slope) dsum = (i == 0) ? w * s[i] : dsum + w * s[i];
      }
      const Var z = (fan_in == 1) ? p[bo + j] + sum : p[bo + j] + sum * inv_fan_in;
      const Var dz = (fan_in == 1) ? dsum : dsum * inv_fan_in;
      if (l == last) {
        next_a[j] = z;
        next_s[j] = dz;
      } else {
        const Activation act = hidden_activation(net, p, l, z, need_slope);
        next_a[j] = act.value;
        if (need_slope) next_s[j] = act.slope * dz;
      }
    }
    a.swap(next_a);
    s.swap(next_s);
  }
  return {a[0], s[0]};
}

}  // namespace detail

/**
 * Dual potential NN(x) - NN(0) - NN'(0) x and its slope d/dx.
 *
 * Removing the tangent at the origin keeps the potential convex and
 * nondecreasing on x >= 0 and makes the flow vanish continuously at zero
 * stress; without it the flow direction s'/s_eq would jump at the origin.
 */
inline ValueSlope potential_forward(const ConstrainedNet& net, std::span<const Var> p, const Var& x,
                                    bool need_slope = true) {
  if (net.profile() != ConstraintProfile::ConvexIncreasing)
    throw ConstraintViolation("potential_forward needs a convex-increasing network");
  if (x.value() < 0.0) throw std::domain_error("potential input must be nonnegative");
  const Var xs = x / net.input_scale;
  const ValueSlope at_x = detail::raw_forward(net, p, xs, need_slope);
  const ValueSlope at_0 = detail::raw_forward(net, p, Var(0.0), true);
  return {(at_x.value - at_0.value - at_0.slope * xs) * net.output_scale,
          need_slope ? (at_x.slope - at_0.slope) * (net.output_scale / net.input_scale) : Var(0.0)};
}

/// Raw slope NN'(0), the tangent removed from the potential.
inline Var potential_origin_slope(const ConstrainedNet& net, std::span<const Var> p) {
  return detail::raw_forward(net, p, Var(0.0), true).slope;
}

/// Slope of the potential at x given a precomputed potential_origin_slope.
inline Var potential_slope(const ConstrainedNet& net, std::span<const Var> p, const Var& x, const Var& origin_slope) {
  const ValueSlope at_x = detail::raw_forward(net, p, x / net.input_scale, true);
  return (at_x.slope - origin_slope) * (net.output_scale / net.input_scale);
}

inline Var potential_slope(const ConstrainedNet& net, std::span<const Var> p, const Var& x) {
  return potential_slope(net, p, x, potential_origin_slope(net, p));
}

/// Hardening resistance output_scale * NN(r / input_scale).
inline Var hardening_forward(const ConstrainedNet& net, std::span<const Var> p, const Var& r) {
  if (net.profile() != ConstraintProfile::MonotoneIncreasing)
    throw ConstraintViolation("hardening_forward needs a monotone-increasing network");
  if (r.value() < 0.0) throw std::domain_error("accumulated plastic strain must be nonnegative");
  return detail::raw_forward(net, p, r / net.input_scale, false).value * net.output_scale;
}

/**
 * Hall-Petch term output_scale / inner(d / input_scale).
 *
 * An inner value at or below 1e-12 is clamped there and reported through
 * degenerate.
 */
inline Var hallpetch_forward(const ConstrainedNet& net, std::span<const Var> p, const Var& d_grain,
                             bool* degenerate = nullptr) {
  if (net.profile() != ConstraintProfile::ReciprocalDecreasing)
    throw ConstraintViolation("hallpetch_forward needs a reciprocal-decreasing network");
  if (!(d_grain.value() > 0.0)) throw std::domain_error("grain size must be positive");
  Var inner = detail::raw_forward(net, p, d_grain / net.input_scale, false).value;
  if (degenerate) *degenerate = false;
  if (inner.value() <= kReciprocalFloor) {
    inner = Var(kReciprocalFloor);
    if (degenerate) *degenerate = true;
  }
  return Var(net.output_scale) / inner;
}

// Convenience overloads on the network's own parameter values.
inline double potential_value(const ConstrainedNet& net, double x) {
  const auto p = constant_params(net);
  return potential_forward(net, p, Var(x), false).value.value();
}
inline double hardening_value(const ConstrainedNet& net, double r) {
  const auto p = constant_params(net);
  return hardening_forward(net, p, Var(r)).value();
}
inline double hallpetch_value(const ConstrainedNet& net, double d) {
  const auto p = constant_params(net);
  return hallpetch_forward(net, p, Var(d)).value();
}

}  // namespace nnevp

#endif  // NNEVP_NETWORKS_HPP
