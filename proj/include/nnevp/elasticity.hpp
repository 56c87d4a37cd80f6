#ifndef NNEVP_ELASTICITY_HPP
#define NNEVP_ELASTICITY_HPP

/**
 * @file elasticity.hpp
 *
 * Isotropic linear elasticity in 6x6 Voigt form.
 */

#include <array>
#include <stdexcept>
#include <string>

#include "nnevp/tensor.hpp"

namespace nnevp {

class ParameterDomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ElasticParams {
  double E = 130e3;  // MPa
  double nu = 0.34;

  double lame_lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
  double shear_modulus() const { return E / (2.0 * (1.0 + nu)); }
  double bulk_modulus() const { return E / (3.0 * (1.0 - 2.0 * nu)); }

  void validate() const {
    if (!(E > 0.0)) throw ParameterDomainError("Young's modulus must be positive, got " + std::to_string(E));
    if (!(nu > -1.0 && nu < 0.5))
      throw ParameterDomainError("Poisson's ratio must lie in (-1, 0.5), got " + std::to_string(nu));
  }
};

/// Row-major 6x6 stiffness acting on tensor-shear Voigt strains.
struct Stiffness66 {
  std::array<double, 36> c{};

  double operator()(std::size_t i, std::size_t j) const { return c[6 * i + j]; }
  double& operator()(std::size_t i, std::size_t j) { return c[6 * i + j]; }
};

inline Stiffness66 build_stiffness(const ElasticParams& p) {
  p.validate();
  const double lambda = p.lame_lambda();
  const double mu = p.shear_modulus();
  Stiffness66 s;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) s(i, j) = lambda;
    s(i, i) = lambda + 2.0 * mu;
  }
  // sigma_23 = C_2323 eps_23 + C_2332 eps_32 = 2 mu eps_23
  for (std::size_t i = 3; i < 6; ++i) s(i, i) = 2.0 * mu;
  return s;
}

/// sigma = C : elastic_strain.
template <class T>
BasicSymTensor<T> hooke(const Stiffness66& c, const BasicSymTensor<T>& elastic_strain) {
  BasicSymTensor<T> out;
  for (std::size_t i = 0; i < 6; ++i) {
    T acc = T(0.0);
    for (std::size_t j = 0; j < 6; ++j) {
      const double cij = c(i, j);
      if (cij != 0.0) acc = acc + elastic_strain.v[j] * cij;
    }
    out.v[i] = acc;
  }
  return out;
}

}  // namespace nnevp

#endif  // NNEVP_ELASTICITY_HPP
