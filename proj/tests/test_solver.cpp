#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nnevp/solver.hpp"

using namespace nnevp;

namespace {

const ElasticParams kCopper{130e3, 0.34};

LoadingProgram program(double target, int steps, double rate = 1e-3) {
  LoadingProgram p;
  p.strain_rate = rate;
  p.target_strain = target;
  p.steps = steps;
  return p;
}

Simulation run(const LoadingProgram& p, const FlowModel& m) {
  Simulation s = simulate_curve(p, m, kCopper, SolverOptions{});
  EXPECT_TRUE(s.ok) << s.diagnostic;
  return s;
}

double max_relative_path_change(const LoadingProgram& coarse, const FlowModel& m) {
  LoadingProgram fine = coarse;
  fine.steps = coarse.steps * 16;
  const Simulation a = run(coarse, m), b = run(fine, m);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    const double ref = b.curve.stress[16 * i + 15];
    worst = std::max(worst, std::fabs(a.curve.stress[i] - ref) / std::fabs(ref));
  }
  return worst;
}

}  // namespace

TEST(Solver, GeometricStepping) {
  LoadingProgram p = program(0.1, 50);
  p.stepping = Stepping::Geometric;
  const auto dts = p.time_steps();
  EXPECT_NEAR(dts.front(), 100.0 * 0.15 / (std::pow(1.15, 50) - 1.0), 1e-15);
  EXPECT_NEAR(dts.front(), 0.01386, 1e-5);
  double sum = 0.0;
  for (std::size_t k = 1; k < dts.size(); ++k) EXPECT_NEAR(dts[k] / dts[k - 1], 1.15, 1e-12);
  for (double d : dts) sum += d;
  EXPECT_NEAR(sum, 100.0, 1e-9);
  EXPECT_DOUBLE_EQ(p.strain_grid().back(), 0.1);

  p.growth = 1.0;
  EXPECT_THROW(p.validate(), ParameterDomainError);
  EXPECT_THROW(program(0.1, 50, -1e-3).validate(), ParameterDomainError);
}

TEST(Solver, ElasticUniaxialOracle) {
  ZeroFlow zero;
  const Simulation s = run(program(0.002, 10), zero);
  for (std::size_t i = 0; i < s.curve.size(); ++i) {
    EXPECT_NEAR(s.curve.stress[i], kCopper.E * s.curve.strain[i], 1e-9 * kCopper.E * s.curve.strain[i]);
    EXPECT_EQ(s.curve.r[i], 0.0);
    EXPECT_EQ(s.stats[i].iterations, 1);
  }
}

TEST(Solver, ElasticTrueUniaxialLateralStrain) {
  ZeroFlow zero;
  const Stiffness66 c = build_stiffness(kCopper);
  MaterialState st;
  const MaterialState next = advance(st, 1.0, program(0.01, 10), zero, c, kCopper, SolverOptions{});
  EXPECT_NEAR(next.strain[1].value(), -kCopper.nu * next.strain[0].value(), 1e-15);
  EXPECT_NEAR(next.strain[2].value(), next.strain[1].value(), 0.0);
}

TEST(Solver, PrescribedLateralElasticSlope) {
  ZeroFlow zero;
  LoadingProgram p = program(0.002, 10);
  p.mode = LoadingMode::PrescribedLateral;
  const Simulation s = run(p, zero);
  const double mu = kCopper.shear_modulus();
  for (std::size_t i = 0; i < s.curve.size(); ++i)
    EXPECT_NEAR(s.curve.stress[i], 2.0 * mu * s.curve.strain[i], 1e-9 * mu);
}

TEST(Solver, PowerLawSaturation) {
  for (double n : {10.0, 20.0, 100.0}) {
    PowerLawFlow m(PowerLawParams{n, 1e-3, 100.0});
    const Simulation s = run(program(0.02, 200), m);
    EXPECT_NEAR(s.curve.stress.back(), 100.0, 0.5) << "n=" << n;
    // Backward Euler is first order; strain steps of 5e-6 (dt = 5 ms) resolve
    // the knee to well under 0.2%.
    EXPECT_LT(max_relative_path_change(program(0.01, 2000), m), 2e-3) << "n=" << n;
  }
}

TEST(Solver, FrobeniusRateOrdersSaturation) {
  const LoadingProgram p = program(0.02, 200);
  double prev = 0.0;
  for (double n : {10.0, 20.0, 100.0}) {
    PowerLawFlow m(PowerLawParams{n, reference_rate(p, RateNorm::Frobenius), 100.0});
    const double sat = run(p, m).curve.stress.back();
    EXPECT_NEAR(sat, 100.0 * std::pow(1.0 / std::sqrt(1.5), 1.0 / n), 0.5);
    EXPECT_GT(sat, prev);
    prev = sat;
  }
}

TEST(Solver, RateSweepIsOrdered) {
  std::vector<double> prev;
  for (double rate : {1e-4, 1e-3, 1e-2, 1e-1}) {
    PowerLawFlow m(PowerLawParams{20.0, 1e-3, 100.0});
    const Simulation s = run(program(0.01, 100, rate), m);
    if (!prev.empty()) {
      for (std::size_t i = 0; i < s.curve.size(); ++i) EXPECT_GE(s.curve.stress[i], prev[i] - 1e-9);
    }
    prev = s.curve.stress;
  }
}

TEST(Solver, PlasticKinematics) {
  PowerLawFlow m(PowerLawParams{10.0, 1e-3, 100.0});
  const LoadingProgram p = program(0.03, 300);
  const Simulation s = run(p, m);
  const std::size_t n = s.curve.size();
  const double rdot = (s.curve.r[n - 1] - s.curve.r[n - 11]) / (s.curve.time[n - 1] - s.curve.time[n - 11]);
  EXPECT_NEAR(rdot, p.strain_rate, 0.01 * p.strain_rate);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_LT(std::fabs(trace(s.vp_strain[i])), 1e-10);
    EXPECT_GE(s.curve.stress[i], 0.0);
    EXPECT_LT(std::fabs(s.stress_tensor[i][1]), 1e-6);
    EXPECT_LT(std::fabs(s.stress_tensor[i][2]), 1e-6);
    if (i) {
      EXPECT_GE(s.curve.r[i], s.curve.r[i - 1]);
    }
    EXPECT_LE(s.stats[i].residual_norm, 1e-6);
  }
}

TEST(Solver, JohnsonCookDenseReference) {
  const JohnsonCookParams jc;
  PowerLawFlow m(PowerLawParams{20.0, 1e-3, jc.A}, jc);
  const LoadingProgram p = program(0.01, 50);
  const Simulation s = run(p, m);
  LoadingProgram dense = p;
  dense.steps = 50 * 32;
  const Simulation ref = run(dense, m);
  EXPECT_NEAR(s.curve.stress.back(), ref.curve.stress.back(), 5e-3 * ref.curve.stress.back());
  // At the flow rate equal to the reference rate the stress sits at R(r).
  const double r_end = ref.curve.r.back();
  EXPECT_NEAR(ref.curve.stress.back(), r_jc(r_end, jc), 5e-3 * r_jc(r_end, jc));
  for (std::size_t i = 0; i < s.curve.size(); ++i) EXPECT_LE(s.stats[i].iterations, 10);
}

TEST(Solver, Deterministic) {
  const JohnsonCookParams jc;
  PowerLawFlow m(PowerLawParams{20.0, 1e-3, jc.A}, jc);
  LoadingProgram p = program(0.02, 50);
  p.stepping = Stepping::Geometric;
  const Simulation a = run(p, m), b = run(p, m);
  EXPECT_EQ(a.curve.stress, b.curve.stress);
  EXPECT_EQ(a.curve.r, b.curve.r);
}

TEST(Solver, NonConvergenceIsReported) {
  PowerLawFlow m(PowerLawParams{100.0, 1e-3, 100.0});
  SolverOptions opt;
  opt.max_iter = 1;
  opt.tol = 1e-14;
  const Simulation s = simulate_curve(program(0.02, 5), m, kCopper, opt);
  EXPECT_FALSE(s.ok);
  EXPECT_FALSE(s.diagnostic.empty());
  EXPECT_LT(s.curve.size(), 5u);
}

TEST(Solver, TapeRecordsDifferentiableStress) {
  // d sigma_end / d sigma_Y through the recorded Newton iterates, checked by
  // central differences on the whole simulation.
  class ScaledFlow final : public FlowModel {
   public:
    explicit ScaledFlow(Var sy) : sy_(sy) {}
    Var resistance(const Var&) const override { return sy_; }
    VarTensor flow(const VarTensor& sigma, const Var& r) const override {
      const Var s_eq = von_mises(sigma);
      if (s_eq.value() == 0.0) return VarTensor::zero();
      return flow_from_slope(sigma, s_eq, pow(s_eq / r, 10.0) * 1e-3);
    }

   private:
    Var sy_;
  };
  const LoadingProgram p = program(0.01, 30);
  Tape t;
  const Var sy = t.leaf(100.0);
  ScaledFlow m(sy);
  SolverOptions opt;
  opt.tape = &t;
  const Simulation s = simulate_curve(p, m, kCopper, opt);
  ASSERT_TRUE(s.ok);
  const double g = t.grad(s.stress.back(), std::vector<Var>{sy})[0];
  auto end_stress = [&](double v) {
    PowerLawFlow f(PowerLawParams{10.0, 1e-3, v});
    return simulate_curve(p, f, kCopper, SolverOptions{}).curve.stress.back();
  };
  const double fd = (end_stress(100.01) - end_stress(99.99)) / 0.02;
  EXPECT_NEAR(g, fd, 1e-4 * std::fabs(fd));
}
