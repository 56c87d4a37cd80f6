#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "nnevp/tensor.hpp"

using namespace nnevp;

namespace {

SymTensor3 random_tensor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  SymTensor3 t;
  for (auto& x : t.v) x = u(rng);
  return t;
}

// Plain 3x3 reference: dev = A - tr(A)/3 I, vm = sqrt(3/2 dev:dev).
double von_mises_matrix(const std::array<double, 9>& a) {
  const double m = (a[0] + a[4] + a[8]) / 3.0;
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double d = a[3 * i + j] - (i == j ? m : 0.0);
      s += d * d;
    }
  return std::sqrt(1.5 * s);
}

}  // namespace

TEST(Tensor, DeviatorExamples) {
  const SymTensor3 a = deviator(SymTensor3::diag(3, 0, 0));
  EXPECT_DOUBLE_EQ(a[0], 2.0);
  EXPECT_DOUBLE_EQ(a[1], -1.0);
  EXPECT_DOUBLE_EQ(a[2], -1.0);

  const SymTensor3 h = deviator(SymTensor3::hydrostatic(7.5));
  for (double x : h.v) EXPECT_DOUBLE_EQ(x, 0.0);

  const SymTensor3 b = deviator(SymTensor3::diag(100, 10, -20));
  EXPECT_NEAR(b[0], 70.0, 1e-12);
  EXPECT_NEAR(b[1], -20.0, 1e-12);
  EXPECT_NEAR(b[2], -50.0, 1e-12);
  EXPECT_NEAR(trace(b), 0.0, 1e-12);
}

TEST(Tensor, FrobeniusNorm) {
  EXPECT_DOUBLE_EQ(frobenius_norm(SymTensor3::diag(1, 0, 0)), 1.0);
  SymTensor3 shear = SymTensor3::zero();
  shear[5] = 4.0;
  EXPECT_NEAR(frobenius_norm(shear), 4.0 * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(frobenius_norm(SymTensor3::diag(2.0 / 3, -1.0 / 3, -1.0 / 3)), std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Tensor, VonMises) {
  EXPECT_NEAR(von_mises(SymTensor3::diag(100, 0, 0)), 100.0, 1e-12);
  EXPECT_NEAR(von_mises(SymTensor3::hydrostatic(-40.0)), 0.0, 1e-12);
  SymTensor3 shear = SymTensor3::zero();
  shear[5] = 10.0;
  EXPECT_NEAR(von_mises(shear), std::sqrt(3.0) * 10.0, 1e-12);
}

TEST(Tensor, MeanStress) {
  EXPECT_DOUBLE_EQ(mean_stress(SymTensor3::diag(3, 3, 3)), 3.0);
  EXPECT_NEAR(mean_stress(deviator(SymTensor3::diag(5, -1, 2))), 0.0, 1e-15);
  EXPECT_NEAR(mean_stress(SymTensor3::diag(100, 10, -20)), 30.0, 1e-12);
}

TEST(Tensor, RandomInvariants) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  for (int k = 0; k < 100; ++k) {
    const SymTensor3 t = random_tensor(rng);
    const double vm = von_mises(t);
    EXPECT_NEAR(von_mises(t + SymTensor3::hydrostatic(u(rng))), vm, 1e-10 * vm);

    const SymTensor3 d = deviator(t);
    const SymTensor3 dd = deviator(d);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(dd[i], d[i], 1e-12 * (1.0 + std::fabs(d[i])));

    EXPECT_DOUBLE_EQ(vm, std::sqrt(1.5) * frobenius_norm(d));
    EXPECT_NEAR(vm, von_mises_matrix(to_matrix(t)), 1e-10 * vm);
  }
}

TEST(Tensor, ContractCountsShearTwice) {
  SymTensor3 a = SymTensor3::zero(), b = SymTensor3::zero();
  a[3] = 2.0;
  b[3] = 3.0;
  EXPECT_DOUBLE_EQ(contract(a, b), 12.0);
  const auto m = to_matrix(a);
  EXPECT_DOUBLE_EQ(m[5], 2.0);
  EXPECT_DOUBLE_EQ(m[7], 2.0);
}

TEST(Tensor, VarTensorMatchesDouble) {
  std::mt19937_64 rng(3);
  const SymTensor3 t = random_tensor(rng);
  const VarTensor v = to_var(t);
  EXPECT_DOUBLE_EQ(von_mises(v).value(), von_mises(t));
  const SymTensor3 back = values(deviator(v));
  const SymTensor3 ref = deviator(t);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(back[i], ref[i]);
}
