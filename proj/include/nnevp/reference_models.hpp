#ifndef NNEVP_REFERENCE_MODELS_HPP
#define NNEVP_REFERENCE_MODELS_HPP

/**
 * @file reference_models.hpp
 *
 * Analytic ground truths: power-law viscoplasticity, Johnson-Cook isotropic
 * hardening and the Hall-Petch grain-size law.
 */

#include <cmath>
#include <string>

#include "nnevp/elasticity.hpp"
#include "nnevp/tensor.hpp"

namespace nnevp {

struct PowerLawParams {
  double n = 10.0;          // rate sensitivity exponent
  double eps_dot_0 = 1e-3;  // reference strain rate, 1/s
  double sigma_y = 100.0;   // initial yield, MPa

  void validate() const {
    if (!(n >= 1.0)) throw ParameterDomainError("rate sensitivity n must be >= 1");
    if (!(eps_dot_0 > 0.0)) throw ParameterDomainError("reference strain rate must be positive");
    if (!(sigma_y > 0.0)) throw ParameterDomainError("initial yield must be positive");
  }
};

/// Johnson-Cook parameters for Cu.
struct JohnsonCookParams {
  double A = 90.0;   // MPa
  double B = 292.0;  // MPa
  double C = 0.31;
  double m = 0.025;
  double n_hard = 1.09;
  double r_star = 1e-3;  // reference rate, 1/s
  double T = 293.0;      // K; the thermal bracket is inert at T == T0
  double T0 = 293.0;
  double Tm = 1356.0;

  void validate() const {
    if (!(A > 0.0)) throw ParameterDomainError("Johnson-Cook A must be positive");
    if (!(B >= 0.0)) throw ParameterDomainError("Johnson-Cook B must be nonnegative");
    if (!(n_hard > 0.0)) throw ParameterDomainError("Johnson-Cook hardening exponent must be positive");
    if (!(r_star > 0.0)) throw ParameterDomainError("Johnson-Cook reference rate must be positive");
    if (!(Tm > T0)) throw ParameterDomainError("melting temperature must exceed reference temperature");
  }

  double thermal_factor() const {
    const double t_star = (T - T0) / (Tm - T0);
    if (t_star <= 0.0) return 1.0;
    return 1.0 - std::pow(t_star, m);
  }
};

struct HallPetchParams {
  double H = 0.143;       // dimensionless coefficient
  double mu = 48507.0;    // shear modulus, MPa
  double b = 2.56e-4;     // Burgers vector, um
  double exponent = 0.5;  // classic inverse square root

  void validate() const {
    if (!(H > 0.0 && mu > 0.0 && b > 0.0 && exponent > 0.0))
      throw ParameterDomainError("Hall-Petch parameters must be positive");
  }
};

/**
 * Johnson-Cook flow stress [A + B r^n][1 + C ln(ratio)][thermal].
 *
 * ratio is the plastic strain rate over the reference rate; at ratio 1 and
 * room temperature this is A + B r^n.
 */
template <class T>
T r_jc(const T& r, const JohnsonCookParams& p, double r_dot_ratio = 1.0) {
  using std::pow;
  if (!(r_dot_ratio > 0.0)) throw ParameterDomainError("Johnson-Cook rate ratio must be positive");
  if (value_of(r) < 0.0) throw ParameterDomainError("accumulated plastic strain must be nonnegative");
  const double rate = 1.0 + p.C * std::log(r_dot_ratio);
  const T base = pow(r, p.n_hard) * p.B + p.A;
  return base * (rate * p.thermal_factor());
}

/**
 * Power-law flow rule 3/2 eps0 (s_eq / R)^n s' / s_eq.
 *
 * Returns the zero tensor for a purely hydrostatic stress.
 */
template <class T>
BasicSymTensor<T> flow_rate_power(const BasicSymTensor<T>& sigma, const T& r_total, const PowerLawParams& p) {
  using std::pow;
  const BasicSymTensor<T> dev = deviator(sigma);
  const T s_eq = von_mises(sigma);
  if (value_of(s_eq) == 0.0) return BasicSymTensor<T>::zero();
  const T scale = pow(s_eq / r_total, p.n) * (1.5 * p.eps_dot_0) / s_eq;
  return scale * dev;
}

/// eps0 / (n + 1) |s_eq / R|^(n + 1).
template <class T>
T dual_potential_power(const T& sigma_eq, const T& r_total, const PowerLawParams& p) {
  using std::abs;
  using std::pow;
  return pow(abs(sigma_eq / r_total), p.n + 1.0) * (p.eps_dot_0 / (p.n + 1.0));
}

/// H mu sqrt(b) / d^p, with the exponent generalised from 1/2.
inline double hall_petch_stress(double d_grain, const HallPetchParams& p) {
  if (!(d_grain > 0.0)) throw ParameterDomainError("grain size must be positive");
  return p.H * p.mu * std::sqrt(p.b) / std::pow(d_grain, p.exponent);
}

}  // namespace nnevp

#endif  // NNEVP_REFERENCE_MODELS_HPP
