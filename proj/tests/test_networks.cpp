#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nnevp/neural_model.hpp"
#include "property_checks.hpp"

using namespace nnevp;
using nnevp::testing::random_projected_draw;

namespace {

ConstrainedNet potential_net() { return ConstrainedNet(ConstraintProfile::ConvexIncreasing, {8, 8}); }
ConstrainedNet hardening_net(MixPair pair = MixPair::ReluLogistic, double a1 = 0.3, double a2 = 0.7) {
  return ConstrainedNet(ConstraintProfile::MonotoneIncreasing, {8, 8}, {pair, a1, a2, false});
}
ConstrainedNet hall_petch_net() { return ConstrainedNet(ConstraintProfile::ReciprocalDecreasing, {8, 8}); }

}  // namespace

TEST(Networks, LayoutAndBounds) {
  const ConstrainedNet p = potential_net();
  // 1x8 + 8 + 8x8 + 8 + 8x1 + 1 weights/biases, two betas
  EXPECT_EQ(p.parameter_count(), 8u + 8 + 64 + 8 + 8 + 1 + 2);
  EXPECT_EQ(p.sizes(), (std::vector<int>{1, 8, 8, 1}));
  EXPECT_TRUE(std::isinf(p.info(p.bias_offset(1)).lower));
  EXPECT_EQ(p.info(p.bias_offset(p.output_layer())).lower, 0.0);
  EXPECT_EQ(p.info(p.beta_offset(1)).lower, kBetaMin);

  const ConstrainedNet trainable(ConstraintProfile::MonotoneIncreasing, {4}, {MixPair::ReluTanh, 0.8, 0.2, true});
  ASSERT_TRUE(trainable.has_alpha());
  EXPECT_EQ(trainable.info(trainable.alpha_offset()).kind, ParamKind::Alpha);
  EXPECT_FALSE(trainable.info(trainable.alpha_offset()).decays);

  EXPECT_THROW(ConstrainedNet(ConstraintProfile::ConvexIncreasing, {}), std::invalid_argument);
  EXPECT_THROW(ConstrainedNet(ConstraintProfile::MonotoneIncreasing, {4}, {MixPair::ReluLogistic, -0.1, 1.0, false}),
               std::invalid_argument);
}

TEST(Networks, ProjectionClampsOnlyConstrainedEntries) {
  ConstrainedNet p = potential_net();
  for (double& x : p.parameters()) x = -0.5;
  p.project();
  EXPECT_DOUBLE_EQ(p.parameters()[p.weight_offset(1)], 0.0);
  EXPECT_DOUBLE_EQ(p.parameters()[p.bias_offset(1)], -0.5);
  EXPECT_DOUBLE_EQ(p.parameters()[p.beta_offset(2)], kBetaMin);
  EXPECT_NO_THROW(p.check_constraints());
  p.parameters()[p.weight_offset(2)] = -1e-9;
  EXPECT_THROW(p.check_constraints(), ConstraintViolation);
}

TEST(Networks, PotentialOriginAndZeroWeights) {
  std::mt19937_64 rng(1);
  ConstrainedNet p = potential_net();
  p.initialize(rng);
  EXPECT_EQ(potential_value(p, 0.0), 0.0);

  for (double& x : p.parameters()) x = 0.0;
  p.reset_adaptive();
  p.parameters()[p.bias_offset(1)] = 0.7;
  for (double x : {0.0, 0.5, 2.0, 10.0}) EXPECT_EQ(potential_value(p, x), 0.0);
}

TEST(Networks, RandomDrawsSatisfyProfiles) {
  std::mt19937_64 rng(2024);
  const auto grains = nnevp::testing::log_grid(0.5, 500.0, 40);
  for (int k = 0; k < 100; ++k) {
    ConstrainedNet p = potential_net();
    random_projected_draw(p, rng);
    EXPECT_EQ(nnevp::testing::potential_violation(p), "") << "draw " << k;

    for (MixPair pair : {MixPair::ReluLogistic, MixPair::ReluTanh, MixPair::LogisticTanh}) {
      ConstrainedNet h = hardening_net(pair);
      random_projected_draw(h, rng);
      EXPECT_EQ(nnevp::testing::hardening_violation(h, 0.2), "") << "draw " << k;
    }

    ConstrainedNet hp = hall_petch_net();
    random_projected_draw(hp, rng);
    EXPECT_EQ(nnevp::testing::hall_petch_violation(hp, grains), "") << "draw " << k;
    const double d1 = std::exp(std::uniform_real_distribution<double>(std::log(0.5), std::log(500.0))(rng));
    const double d2 = d1 * 1.7;
    EXPECT_GE(hallpetch_value(hp, d1), hallpetch_value(hp, d2));
  }
}

TEST(Networks, HallPetchConstantInnerNet) {
  ConstrainedNet hp = hall_petch_net();
  for (double& x : hp.parameters()) x = 0.0;
  hp.parameters()[hp.bias_offset(hp.output_layer())] = 0.25;
  hp.output_scale = 10.0;
  for (double d : {0.5, 3.0, 100.0}) EXPECT_DOUBLE_EQ(hallpetch_value(hp, d), 40.0);

  hp.parameters()[hp.bias_offset(hp.output_layer())] = 0.0;
  bool degenerate = false;
  const auto p = constant_params(hp);
  const Var v = hallpetch_forward(hp, p, Var(2.0), &degenerate);
  EXPECT_TRUE(degenerate);
  EXPECT_TRUE(std::isfinite(v.value()));
}

TEST(Networks, PotentialSlopeMatchesTapeDerivative) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    ConstrainedNet p = potential_net();
    random_projected_draw(p, rng);
    p.input_scale = 1.3;
    p.output_scale = 0.7;
    const auto cp = constant_params(p);
    for (double x : {0.1, 0.9, 1.4, 2.5}) {
      Tape t;
      const Var xv = t.leaf(x);
      const Var phi = potential_forward(p, cp, xv, false).value;
      const double d = t.grad(phi, std::vector<Var>{xv})[0];
      const double s = potential_slope(p, cp, Var(x)).value();
      EXPECT_LE(std::fabs(d - s), 1e-8 * std::max(1.0, std::fabs(s)));
      EXPECT_NEAR(potential_forward(p, cp, Var(x)).slope.value(), s, 1e-12 * std::max(1.0, std::fabs(s)));
    }
  }
}

TEST(Networks, FlowIsPotentialGradient) {
  std::mt19937_64 rng(9);
  ArchitectureSpec arch;
  arch.hidden = {6, 6};
  NetworkSet nets = make_network_set(Experiment::Hardening, arch, ModelScales{}, rng);
  const ParamViews views = ParamViews::make(nets, nullptr);

  std::uniform_real_distribution<double> u(-60.0, 60.0);
  for (int k = 0; k < 20; ++k) {
    Tape t;
    std::vector<Var> leaves;
    VarTensor s;
    for (std::size_t i = 0; i < 6; ++i) {
      leaves.push_back(t.leaf(u(rng)));
      s.v[i] = leaves.back();
    }
    const Var r = 0.003;
    const Var denom = hardening_forward(*nets.hardening, views.hardening, r);
    // phi*(s) = rate_scale * D * NN_phi(s_eq / D), so d phi*/d sigma = flow.
    const Var phi = potential_forward(nets.potential, views.potential, von_mises(s) / denom, false).value *
                    denom * nets.rate_scale;
    const auto g = t.grad(phi, leaves);
    const SymTensor3 f = values(viscoplastic_flow_nn(to_var(values(s)), r, std::nullopt, nets, views));
    const double scale = frobenius_norm(f);
    for (std::size_t i = 0; i < 6; ++i)
      EXPECT_LE(std::fabs(g[i] - SymTensor3::multiplicity(i) * f[i]), 1e-8 * scale) << "slot " << i;
  }
}

TEST(Networks, ZeroStressGivesZeroFlow) {
  std::mt19937_64 rng(10);
  NetworkSet nets = make_network_set(Experiment::Perfect, ArchitectureSpec{}, ModelScales{}, rng);
  const ParamViews views = ParamViews::make(nets, nullptr);
  const VarTensor f = viscoplastic_flow_nn(VarTensor::zero(), Var(0.0), std::nullopt, nets, views);
  for (const Var& x : f.v) EXPECT_EQ(x.value(), 0.0);
  EXPECT_THROW(viscoplastic_flow_nn(VarTensor::zero(), Var(0.0), 3.0, nets, views), std::invalid_argument);
}

TEST(Networks, HallPetchTermRaisesFlowThreshold) {
  std::mt19937_64 rng(12);
  ArchitectureSpec arch;
  arch.hidden = {6, 6};
  NetworkSet nets = make_network_set(Experiment::HallPetch, arch, ModelScales{1e-3, 100.0, 0.01, 2.0}, rng);
  const auto cp = constant_params(nets.potential);
  const double R = hardening_value(*nets.hardening, 0.0);
  // Stress at which the uniaxial flow rate reaches the reference rate.
  auto threshold = [&](double extra) {
    const double denom = R + extra;
    double lo = 0.0, hi = 50.0 * denom;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double rate = nets.rate_scale * potential_slope(nets.potential, cp, Var(mid / denom)).value();
      (rate < 1e-3 ? lo : hi) = mid;
    }
    return lo;
  };
  double prev = threshold(0.0);
  for (double extra : {1.0, 5.0, 20.0, 80.0}) {
    const double t = threshold(extra);
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(Networks, NetworkSetInitialScales) {
  std::mt19937_64 rng(4);
  ArchitectureSpec arch;
  const ModelScales scales{1e-3, 120.0, 0.004, 2.1};

  NetworkSet perfect = make_network_set(Experiment::Perfect, arch, scales, rng);
  EXPECT_EQ(perfect.experiment(), Experiment::Perfect);
  EXPECT_NEAR(potential_slope(perfect.potential, constant_params(perfect.potential), Var(1.0)).value(), 1.0, 1e-12);

  NetworkSet hard = make_network_set(Experiment::Hardening, arch, scales, rng);
  EXPECT_NEAR(hardening_value(*hard.hardening, 0.0), 120.0, 1e-9);
  const double rise = hardening_value(*hard.hardening, scales.strain) / 120.0 - 1.0;
  EXPECT_GE(rise, 0.0);
  EXPECT_LE(rise, arch.initial_hardening + 1e-12);

  NetworkSet hp = make_network_set(Experiment::HallPetch, arch, scales, rng);
  EXPECT_NEAR(hallpetch_value(*hp.hall_petch, 2.1), 0.9 * 120.0, 1e-9);
  EXPECT_NEAR(hardening_value(*hp.hardening, 0.0), 0.1 * 120.0, 1e-9);
  EXPECT_NO_THROW(hp.check_constraints());
}

TEST(Networks, FlatParametersRoundTrip) {
  std::mt19937_64 rng(6);
  NetworkSet nets = make_network_set(Experiment::HallPetch, ArchitectureSpec{}, ModelScales{}, rng);
  auto flat = nets.flat_parameters();
  EXPECT_EQ(flat.size(), nets.parameter_count());
  flat[3] += 0.25;
  nets.set_flat_parameters(flat);
  EXPECT_EQ(nets.flat_parameters(), flat);
  flat.pop_back();
  EXPECT_THROW(nets.set_flat_parameters(flat), std::invalid_argument);
}

TEST(Networks, MixNames) {
  for (MixPair p : {MixPair::ReluLogistic, MixPair::ReluTanh, MixPair::LogisticTanh})
    EXPECT_EQ(mix_pair_from_string(to_string(p)), p);
  EXPECT_THROW(mix_pair_from_string("relu"), std::invalid_argument);
}
