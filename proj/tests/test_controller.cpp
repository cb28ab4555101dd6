#include "bfc/controller.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bfc;

namespace {

ControllerParams two_stage(Transform psi_x, Transform psi_v, Eigen::Index n = 2) {
  ControllerParams p;
  p.funnel_x = FunnelSpec::broadcast(0.2, 0.02, 0.1, n);
  p.funnel_v = FunnelSpec::broadcast(2.0, 0.02, 0.1, n);
  p.psi_x = psi_x;
  p.psi_v = psi_v;
  p.v_max = Vec::Constant(n, 6.0);
  p.tau_max = Vec::Constant(n, 10.0);
  return p;
}

ControllerParams single_stage(double v_max = 0.1) {
  ControllerParams p;
  p.funnel_x = FunnelSpec::broadcast(0.2, 0.02, 0.1, 3);
  p.psi_x = Transform::saturation_tanh(5);
  p.v_max = Vec::Constant(3, v_max);
  return p;
}

Vec v1(double x) { return Vec::Constant(1, x); }

}  // namespace

TEST(Controller, Stage1ZeroAtReference) {
  const FunnelController c(two_stage(Transform::saturation_smooth(5), Transform::saturation_smooth(5)));
  const Vec x = (Vec(2) << 0.3, -1.2).finished();
  EXPECT_EQ(c.stage1_velocity(4.0, x, x), Vec::Zero(2));
}

TEST(Controller, Stage1Tanh) {
  const FunnelController c(two_stage(Transform::saturation_tanh(5), Transform::saturation_tanh(5), 1));
  // eps_x = 0.5 at t = 0: e = 0.1
  const Vec vr = c.stage1_velocity(0.0, v1(0.1), v1(0.0));
  EXPECT_NEAR(vr[0], static_cast<double>(-6.0L * std::tanh(2.5L)), 1e-14);
  EXPECT_NEAR(vr[0], -5.919686, 1e-6);
}

TEST(Controller, Stage1ApproachesBoundAtEdge) {
  const FunnelController c(two_stage(Transform::saturation_tanh(5), Transform::saturation_tanh(5), 1));
  const Vec vr = c.stage1_velocity(0.0, v1(0.2 * (1 - 1e-12)), v1(0.0));
  EXPECT_NEAR(vr[0], -6.0 * std::tanh(5.0), 1e-9);
  EXPECT_NEAR(c.stage1_velocity(0.0, v1(100.0), v1(0.0))[0], -6.0, 1e-12);
}

TEST(Controller, Stage2Tanh) {
  const FunnelController c(two_stage(Transform::saturation_tanh(5), Transform::saturation_tanh(5), 1));
  // eps_v = -0.2 at t = 0: v - v_r = -0.4
  const Vec tau = c.stage2_torque(0.0, v1(-0.4), v1(0.0));
  EXPECT_NEAR(tau[0], static_cast<double>(10.0L * std::tanh(1.0L)), 1e-14);
  EXPECT_NEAR(tau[0], 7.6159, 1e-4);
  EXPECT_EQ(c.stage2_torque(3.0, v1(0.7), v1(0.7))[0], 0.0);
  EXPECT_NEAR(c.stage2_torque(0.0, v1(1e6), v1(0.0))[0], -10.0, 1e-12);
}

TEST(Controller, StepAtRest) {
  const FunnelController c(two_stage(Transform::saturation_smooth(5), Transform::saturation_smooth(5)));
  const Vec x = (Vec(2) << 1.0, 2.0).finished();
  const auto out = c.step(0.0, x, Vec::Zero(2), x);
  EXPECT_EQ(out.command, Vec::Zero(2));
  EXPECT_EQ(out.diag.v_r, Vec::Zero(2));
  EXPECT_EQ(out.diag.eps_v, Vec::Zero(2));
  EXPECT_TRUE(out.diag.inside_x.all);
  EXPECT_TRUE(out.diag.inside_v.all);
}

TEST(Controller, StepComposesStages) {
  const FunnelController c(two_stage(Transform::saturation_smooth(5), Transform::zeroing_sine_gauss()));
  const Vec x = (Vec(2) << 0.05, -0.1).finished();
  const Vec v = (Vec(2) << 0.3, 0.2).finished();
  const Vec xr = (Vec(2) << 0.0, 0.02).finished();
  const double t = 1.5;
  const auto out = c.step(t, x, v, xr);
  const Vec vr = c.stage1_velocity(t, x, xr);
  EXPECT_EQ(out.diag.v_r, vr);
  EXPECT_EQ(out.command, c.stage2_torque(t, v, vr));
  EXPECT_EQ(out.diag.e_x, x - xr);
  EXPECT_EQ(out.diag.e_v, v - vr);
}

TEST(Controller, SingleStageBoundary) {
  const FunnelController c(single_stage());
  const Vec e = Vec::Constant(3, 0.2);
  const auto out = c.step(0.0, e, Vec(), Vec::Zero(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(out.command[i], -0.1 * std::tanh(5.0), 1e-15);
  EXPECT_EQ(out.command, out.diag.v_r);
  EXPECT_FALSE(out.diag.inside_x.all);  // boundary counts as outside
  EXPECT_EQ(out.diag.eps_v.size(), 0);
}

TEST(Controller, ZeroingStage2FarOutside) {
  const FunnelController c(two_stage(Transform::saturation_smooth(5), Transform::zeroing_sine_gauss(), 1));
  // eps_v = 5 at t = 0: e_v = 10
  const Vec tau = c.stage2_torque(0.0, v1(10.0), v1(0.0));
  EXPECT_LT(std::abs(tau[0]), 0.05 * 10.0);
}

TEST(Controller, ParameterErrors) {
  auto p = two_stage(Transform::saturation_smooth(5), Transform::saturation_smooth(5));
  p.tau_max.reset();
  EXPECT_THROW(FunnelController{p}, ConfigError);
  p = two_stage(Transform::saturation_smooth(5), Transform::saturation_smooth(5));
  p.v_max[1] = 0.0;
  EXPECT_THROW(FunnelController{p}, ConfigError);
  p = two_stage(Transform::saturation_smooth(5), Transform::saturation_smooth(5));
  p.tau_max = Vec::Constant(3, 1.0);
  EXPECT_THROW(FunnelController{p}, ConfigError);
  p = two_stage(Transform::saturation_smooth(5), Transform::saturation_smooth(5));
  (*p.tau_max)[0] = -1.0;
  EXPECT_THROW(FunnelController{p}, ConfigError);

  const FunnelController single(single_stage());
  EXPECT_THROW(single.stage2_torque(0.0, Vec::Zero(3), Vec::Zero(3)), ConfigError);
  const FunnelController two(two_stage(Transform::saturation_smooth(5), Transform::saturation_smooth(5)));
  EXPECT_THROW(two.step(0.0, Vec::Zero(3), Vec::Zero(3), Vec::Zero(3)), DomainError);
  EXPECT_THROW(two.step(0.0, Vec::Zero(2), Vec::Zero(1), Vec::Zero(2)), DomainError);
  EXPECT_THROW(two.step(-1.0, Vec::Zero(2), Vec::Zero(2), Vec::Zero(2)), DomainError);
}

TEST(ControllerProperty, HardBoundSignAndStatelessness) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::vector<Transform> kinds = {Transform::saturation_tanh(5), Transform::saturation_logistic(5),
                                        Transform::saturation_smooth(5), Transform::zeroing_sine_gauss(),
                                        Transform::zeroing_poly_sine_gauss()};
  for (int k = 0; k < 5000; ++k) {
    const auto& px = kinds[static_cast<std::size_t>(k) % kinds.size()];
    const auto& pv = kinds[static_cast<std::size_t>(k / 5) % kinds.size()];
    const FunnelController c(two_stage(px, pv));
    const double t = 30.0 * (U(rng) + 1.0);
    const Vec x = Vec::NullaryExpr(2, [&] { return 1e3 * U(rng) * std::pow(10.0, 3 * U(rng)); });
    const Vec v = Vec::NullaryExpr(2, [&] { return 1e3 * U(rng) * std::pow(10.0, 3 * U(rng)); });
    const Vec xr = Vec::NullaryExpr(2, [&] { return U(rng); });
    const auto out = c.step(t, x, v, xr);
    ASSERT_TRUE(out.command.allFinite());
    ASSERT_TRUE((out.command.array().abs() <= 10.0).all());
    ASSERT_TRUE((out.diag.v_r.array().abs() <= 6.0).all());
    const auto again = c.step(t, x, v, xr);
    ASSERT_EQ(out.command, again.command);
  }
  // Sign: saturation kinds, errors inside the funnel.
  for (const auto& psi : {Transform::saturation_tanh(5), Transform::saturation_logistic(5),
                          Transform::saturation_smooth(5)}) {
    const FunnelController c(two_stage(psi, psi, 1));
    for (int k = 0; k < 1000; ++k) {
      const double t = 10.0 * (U(rng) + 1.0);
      const double ex = 0.99 * U(rng) * c.params().funnel_x.eval(t)[0];
      const Vec vr = c.stage1_velocity(t, v1(ex), v1(0.0));
      if (ex != 0.0 && vr[0] != 0.0) ASSERT_EQ(std::signbit(vr[0]), !std::signbit(ex));
      const double ev = 0.99 * U(rng) * c.params().funnel_v->eval(t)[0];
      const Vec tau = c.stage2_torque(t, v1(ev), v1(0.0));
      if (ev != 0.0 && tau[0] != 0.0) ASSERT_EQ(std::signbit(tau[0]), !std::signbit(ev));
    }
  }
}
