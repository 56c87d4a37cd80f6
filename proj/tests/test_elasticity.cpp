#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "nnevp/elasticity.hpp"

using namespace nnevp;

TEST(Elasticity, CopperModuli) {
  const ElasticParams p{130e3, 0.34};
  // lambda = E nu / ((1 + nu)(1 - 2 nu)), mu = E / (2 (1 + nu))
  // Four significant figures.
  EXPECT_NEAR(p.lame_lambda(), 103084.0, 5e-4 * 103084.0);
  EXPECT_NEAR(p.shear_modulus(), 48507.0, 5e-4 * 48507.0);
  const Stiffness66 c = build_stiffness(p);
  EXPECT_NEAR(c(0, 0), 200098.0, 5e-4 * 200098.0);
  EXPECT_NEAR(c(0, 0), p.lame_lambda() + 2.0 * p.shear_modulus(), 1e-9);
  EXPECT_NEAR(c(0, 1), p.lame_lambda(), 1e-9);
  EXPECT_NEAR(c(3, 3), 2.0 * p.shear_modulus(), 1e-9);
  EXPECT_DOUBLE_EQ(c(0, 3), 0.0);
}

TEST(Elasticity, ZeroPoisson) {
  const Stiffness66 c = build_stiffness({1000.0, 0.0});
  EXPECT_DOUBLE_EQ(c(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(c(0, 0), 1000.0);
}

TEST(Elasticity, InvalidParameters) {
  EXPECT_THROW(build_stiffness({-1.0, 0.3}), ParameterDomainError);
  EXPECT_THROW(build_stiffness({100.0, 0.5}), ParameterDomainError);
  EXPECT_THROW(build_stiffness({100.0, -1.0}), ParameterDomainError);
}

TEST(Elasticity, HookeExamples) {
  const ElasticParams p{130e3, 0.34};
  const Stiffness66 c = build_stiffness(p);
  const SymTensor3 zero = hooke(c, SymTensor3::zero());
  for (double x : zero.v) EXPECT_DOUBLE_EQ(x, 0.0);

  const double e = 1e-3;
  const SymTensor3 s = hooke(c, SymTensor3::diag(e, -p.nu * e, -p.nu * e));
  EXPECT_NEAR(s[0], p.E * e, 1e-9 * p.E * e);
  EXPECT_NEAR(s[1], 0.0, 1e-9 * p.E * e);
  EXPECT_NEAR(s[2], 0.0, 1e-9 * p.E * e);

  const SymTensor3 h = hooke(c, SymTensor3::hydrostatic(e));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(h[i], 3.0 * p.bulk_modulus() * e, 1e-6);
}

TEST(Elasticity, ShearUsesTensorComponent) {
  const ElasticParams p{130e3, 0.34};
  SymTensor3 eps = SymTensor3::zero();
  eps[5] = 1e-3;
  EXPECT_NEAR(hooke(build_stiffness(p), eps)[5], 2.0 * p.shear_modulus() * 1e-3, 1e-9);
}

TEST(Elasticity, HookeIsLinear) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  const Stiffness66 c = build_stiffness({130e3, 0.34});
  for (int k = 0; k < 50; ++k) {
    SymTensor3 x, y;
    for (std::size_t i = 0; i < 6; ++i) x[i] = u(rng), y[i] = u(rng);
    const double a = u(rng) * 1e3, b = u(rng) * 1e3;
    const SymTensor3 lhs = hooke(c, a * x + b * y);
    const SymTensor3 rhs = a * hooke(c, x) + b * hooke(c, y);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-10 * (1.0 + std::fabs(rhs[i])));
  }
}

TEST(Elasticity, StiffnessPositiveDefinite) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> e_dist(1e3, 4e5), nu_dist(-0.99, 0.499);
  for (int k = 0; k < 100; ++k) {
    const Stiffness66 c = build_stiffness({e_dist(rng), nu_dist(rng)});
    Eigen::Matrix<double, 6, 6> m;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m(i, j) = c(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(m);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}
