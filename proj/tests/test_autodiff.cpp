#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "nnevp/autodiff.hpp"
#include "nnevp/solver.hpp"

using namespace nnevp;

namespace {

using VarFn = std::function<Var(const Var&)>;
using DblFn = std::function<double(double)>;

double central_difference(const DblFn& f, double x) {
  const double h = 1e-6 * std::max(1.0, std::fabs(x));
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double tape_derivative(const VarFn& f, double x) {
  Tape t;
  const Var v = t.leaf(x);
  const Var y = f(v);
  return t.grad(y, std::vector<Var>{v})[0];
}

void expect_relative(double got, double want, double tol) {
  EXPECT_LE(std::fabs(got - want), tol * std::max(1.0, std::fabs(want))) << "got " << got << " want " << want;
}

}  // namespace

TEST(Autodiff, SpecExamples) {
  EXPECT_DOUBLE_EQ(tape_derivative([](const Var& x) { return x * x; }, 3.0), 6.0);
  EXPECT_DOUBLE_EQ(tape_derivative([](const Var& x) { return softplus(x); }, 0.0), 0.5);

  Tape t;
  const Var x = t.leaf(2.0), y = t.leaf(0.0);
  const Var f = x * tanh(y);
  const auto g = t.grad(f, std::vector<Var>{x, y});
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
}

TEST(Autodiff, PrimitivesMatchFiniteDifferences) {
  struct Case {
    const char* name;
    VarFn f;
    DblFn g;
    double lo, hi;
  };
  const std::vector<Case> cases = {
      {"add", [](const Var& x) { return x + 3.0 * x; }, [](double x) { return 4.0 * x; }, -5, 5},
      {"sub", [](const Var& x) { return 2.0 - x * x; }, [](double x) { return 2.0 - x * x; }, -5, 5},
      {"div", [](const Var& x) { return (x + 1.0) / (x * x + 2.0); }, [](double x) { return (x + 1) / (x * x + 2); }, -5, 5},
      {"constdiv", [](const Var& x) { return 3.0 / x; }, [](double x) { return 3.0 / x; }, 0.5, 5},
      {"neg", [](const Var& x) { return -x * x; }, [](double x) { return -x * x; }, -5, 5},
      {"exp", [](const Var& x) { return exp(x); }, [](double x) { return std::exp(x); }, -3, 3},
      {"log", [](const Var& x) { return log(x); }, [](double x) { return std::log(x); }, 0.1, 10},
      {"sqrt", [](const Var& x) { return sqrt(x); }, [](double x) { return std::sqrt(x); }, 0.1, 10},
      {"tanh", [](const Var& x) { return tanh(x); }, [](double x) { return std::tanh(x); }, -3, 3},
      {"sigmoid", [](const Var& x) { return sigmoid(x); }, [](double x) { return 1 / (1 + std::exp(-x)); }, -6, 6},
      {"softplus", [](const Var& x) { return softplus(x); }, [](double x) { return std::log1p(std::exp(x)); }, -6, 6},
      {"relu", [](const Var& x) { return relu(x); }, [](double x) { return x > 0 ? x : 0.0; }, 0.1, 5},
      {"abs", [](const Var& x) { return abs(x); }, [](double x) { return std::fabs(x); }, -5, -0.1},
      {"pow", [](const Var& x) { return pow(x, 10.5); }, [](double x) { return std::pow(x, 10.5); }, 0.2, 2},
  };
  std::mt19937_64 rng(17);
  for (const Case& c : cases) {
    std::uniform_real_distribution<double> u(c.lo, c.hi);
    for (int k = 0; k < 20; ++k) {
      const double x = u(rng);
      SCOPED_TRACE(std::string(c.name) + " at " + std::to_string(x));
      EXPECT_DOUBLE_EQ(c.f(Var(x)).value(), c.g(x));
      expect_relative(tape_derivative(c.f, x), central_difference(c.g, x), 1e-6);
    }
  }
}

TEST(Autodiff, NonSmoothPointsUseZeroSubgradient) {
  EXPECT_DOUBLE_EQ(tape_derivative([](const Var& x) { return relu(x); }, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(tape_derivative([](const Var& x) { return abs(x); }, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(tape_derivative([](const Var& x) { return abs(x); }, -2.0), -1.0);
}

TEST(Autodiff, ConstantsAreNotRecorded) {
  Tape t;
  const Var x = t.leaf(1.0);
  const std::size_t before = t.size();
  const Var c = Var(2.0) * Var(3.0) + exp(Var(0.0));
  EXPECT_TRUE(c.is_constant());
  EXPECT_DOUBLE_EQ(c.value(), 7.0);
  EXPECT_EQ(t.size(), before);
  EXPECT_DOUBLE_EQ(t.grad(c, std::vector<Var>{x})[0], 0.0);
}

TEST(Autodiff, JacobianIdentityAndLinearMap) {
  Tape t;
  std::vector<Var> x = {t.leaf(1.0), t.leaf(-2.0), t.leaf(0.5)};
  const auto id = jacobian(t, x, x);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(id[i][j], i == j ? 1.0 : 0.0);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double a[4][4];
  std::vector<Var> in;
  for (int i = 0; i < 4; ++i) in.push_back(t.leaf(u(rng)));
  std::vector<Var> out;
  for (int i = 0; i < 4; ++i) {
    Var s = 0.0;
    for (int j = 0; j < 4; ++j) {
      a[i][j] = u(rng);
      s = s + in[static_cast<std::size_t>(j)] * a[i][j];
    }
    out.push_back(s);
  }
  const auto jac = jacobian(t, out, in);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(jac[i][j], a[i][j], 1e-12);
}

TEST(Autodiff, ElasticResidualJacobian) {
  const ElasticParams ep{130e3, 0.34};
  const Stiffness66 c = build_stiffness(ep);
  const double lambda = ep.lame_lambda(), mu = ep.shear_modulus();
  ZeroFlow zero;
  MaterialState state;
  StepSetup s;
  s.state = &state;
  s.dt = 1.0;
  s.axial_strain = 1e-4;
  s.resistance = 100.0;

  Tape t;
  std::vector<Var> u = {t.leaf(5.0), t.leaf(-3e-5)};
  auto jac = jacobian(t, residual(u, s, zero, c), u);
  // R0 = s - (C11 e11 + 2 C12 e22), R1 = C21 e11 + (C22 + C23) e22
  EXPECT_NEAR(jac[0][0], 1.0, 1e-12);
  EXPECT_NEAR(jac[0][1], -2.0 * lambda, 1e-6);
  EXPECT_NEAR(jac[1][0], 0.0, 1e-12);
  EXPECT_NEAR(jac[1][1], 2.0 * lambda + 2.0 * mu, 1e-6);

  s.mode = LoadingMode::PrescribedLateral;
  s.prescribed_strain = VarTensor::diag(1e-4, -5e-5, -5e-5);
  std::vector<Var> w;
  for (int i = 0; i < 6; ++i) w.push_back(t.leaf(0.1 * i));
  jac = jacobian(t, residual(w, s, zero, c), w);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(jac[i][j], i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Autodiff, GradientIsLinearOverGraphs) {
  Tape t;
  const Var x = t.leaf(0.7), y = t.leaf(-1.3);
  const Var f1 = exp(x) * y, f2 = tanh(x * y), f3 = sqrt(x * x + y * y);
  const std::vector<Var> in = {x, y};
  const auto gs = t.grad(f1 + f2 + f3, in);
  const auto g1 = t.grad(f1, in), g2 = t.grad(f2, in), g3 = t.grad(f3, in);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(gs[i], g1[i] + g2[i] + g3[i], 1e-14);
}

TEST(Autodiff, CopyAndReplay) {
  Tape t;
  const Var x = t.leaf(2.0);
  const Var c = t.copy(x * x);
  const Var y = log(c) + sigmoid(x);
  EXPECT_NEAR(t.grad(y, std::vector<Var>{x})[0], 1.0 + Tape::sigmoid(2.0) * (1.0 - Tape::sigmoid(2.0)), 1e-14);
  const auto replayed = t.replay();
  EXPECT_DOUBLE_EQ(replayed[static_cast<std::size_t>(y.id())], y.value());
  const auto prefix = t.grad_prefix(y, 1);
  EXPECT_NEAR(prefix[0], t.grad(y, std::vector<Var>{x})[0], 1e-15);
}

TEST(Autodiff, MixedTapesRejected) {
  Tape a, b;
  const Var x = a.leaf(1.0), y = b.leaf(2.0);
  EXPECT_THROW((void)(x + y), TapeError);
  EXPECT_THROW((void)a.grad(y, std::vector<Var>{x}), TapeError);
}
