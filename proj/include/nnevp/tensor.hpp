#ifndef NNEVP_TENSOR_HPP
#define NNEVP_TENSOR_HPP

/**
 * @file tensor.hpp
 *
 * Symmetric second-order tensors in 6-component Voigt storage.
 *
 * Voigt order is (11, 22, 33, 23, 13, 12). Shear slots hold the tensor
 * components for both stress and strain (no engineering factor of 2), so
 * every contraction and norm counts each off-diagonal slot twice.
 */

#include <array>
#include <cmath>
#include <cstddef>

#include "nnevp/autodiff.hpp"

namespace nnevp {

template <class T>
struct BasicSymTensor {
  std::array<T, 6> v{};

  static BasicSymTensor zero() { return BasicSymTensor{{T(0.0), T(0.0), T(0.0), T(0.0), T(0.0), T(0.0)}}; }
  static BasicSymTensor diag(T a, T b, T c) { return BasicSymTensor{{a, b, c, T(0.0), T(0.0), T(0.0)}}; }
  static BasicSymTensor hydrostatic(T p) { return diag(p, p, p); }

  T& operator[](std::size_t i) { return v[i]; }
  const T& operator[](std::size_t i) const { return v[i]; }

  /// Shear slots 3..5 appear twice in the full 3x3 tensor.
  static constexpr double multiplicity(std::size_t i) { return i < 3 ? 1.0 : 2.0; }
};

using SymTensor3 = BasicSymTensor<double>;
using VarTensor = BasicSymTensor<Var>;

template <class T>
BasicSymTensor<T> operator+(const BasicSymTensor<T>& a, const BasicSymTensor<T>& b) {
  BasicSymTensor<T> r;
  for (std::size_t i = 0; i < 6; ++i) r.v[i] = a.v[i] + b.v[i];
  return r;
}

template <class T>
BasicSymTensor<T> operator-(const BasicSymTensor<T>& a, const BasicSymTensor<T>& b) {
  BasicSymTensor<T> r;
  for (std::size_t i = 0; i < 6; ++i) r.v[i] = a.v[i] - b.v[i];
  return r;
}

template <class T, class S>
BasicSymTensor<T> operator*(const S& s, const BasicSymTensor<T>& a) {
  BasicSymTensor<T> r;
  for (std::size_t i = 0; i < 6; ++i) r.v[i] = a.v[i] * s;
  return r;
}

template <class T>
T trace(const BasicSymTensor<T>& t) {
  return t.v[0] + t.v[1] + t.v[2];
}

/// trace / 3. Called J3 in some texts; not used by the flow rule.
template <class T>
T mean_stress(const BasicSymTensor<T>& t) {
  return trace(t) * (1.0 / 3.0);
}

template <class T>
BasicSymTensor<T> deviator(const BasicSymTensor<T>& t) {
  const T m = mean_stress(t);
  BasicSymTensor<T> r = t;
  for (std::size_t i = 0; i < 3; ++i) r.v[i] = t.v[i] - m;
  return r;
}

/// Full-tensor contraction a : b.
template <class T>
T contract(const BasicSymTensor<T>& a, const BasicSymTensor<T>& b) {
  T s = a.v[0] * b.v[0] + a.v[1] * b.v[1] + a.v[2] * b.v[2];
  T shear = a.v[3] * b.v[3] + a.v[4] * b.v[4] + a.v[5] * b.v[5];
  return s + shear * 2.0;
}

template <class T>
T frobenius_norm(const BasicSymTensor<T>& t) {
  using std::sqrt;
  return sqrt(contract(t, t));
}

/// sqrt(3/2) |dev(t)|.
template <class T>
T von_mises(const BasicSymTensor<T>& t) {
  using std::sqrt;
  const BasicSymTensor<T> d = deviator(t);
  return sqrt(contract(d, d) * 1.5);
}

template <class T>
BasicSymTensor<double> values(const BasicSymTensor<T>& t) {
  BasicSymTensor<double> r;
  for (std::size_t i = 0; i < 6; ++i) r.v[i] = value_of(t.v[i]);
  return r;
}

inline VarTensor to_var(const SymTensor3& t) {
  VarTensor r;
  for (std::size_t i = 0; i < 6; ++i) r.v[i] = t.v[i];
  return r;
}

/// Expands to a row-major 3x3 matrix.
inline std::array<double, 9> to_matrix(const SymTensor3& t) {
  return {t.v[0], t.v[5], t.v[4], t.v[5], t.v[1], t.v[3], t.v[4], t.v[3], t.v[2]};
}

}  // namespace nnevp

#endif  // NNEVP_TENSOR_HPP
