#include "stplan/vehicle_model.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "stplan/rng.hpp"

using namespace stplan;

namespace {

VehicleParams params() {
  VehicleParams p;
  p.wheelbase = 2.5;
  p.dt = 0.1;
  return p;
}

TEST(Step, StraightCoast) {
  const auto n = step({0.0, 0.0, 0.0, 10.0}, {0.0, 0.0}, params());
  EXPECT_DOUBLE_EQ(n.x, 1.0);
  EXPECT_DOUBLE_EQ(n.y, 0.0);
  EXPECT_DOUBLE_EQ(n.theta, 0.0);
  EXPECT_DOUBLE_EQ(n.v, 10.0);
}

TEST(Step, ZeroSpeedIgnoresSteering) {
  const auto n = step({3.0, -2.0, 0.7, 0.0}, {1.5, 0.4}, params());
  EXPECT_DOUBLE_EQ(n.x, 3.0);
  EXPECT_DOUBLE_EQ(n.y, -2.0);
  EXPECT_DOUBLE_EQ(n.theta, 0.7);
  EXPECT_NEAR(n.v, 0.15, 1e-15);
}

TEST(Step, HeadingRateMatchesBicycleModel) {
  const auto n = step({0.0, 0.0, 0.0, 10.0}, {0.0, 0.1}, params());
  EXPECT_NEAR(n.theta, 10.0 / 2.5 * std::tan(0.1) * 0.1, 1e-12);
  EXPECT_NEAR(n.theta, 0.040134, 1e-6);
}

TEST(Step, SteeringSingularThrows) {
  EXPECT_THROW(step({0, 0, 0, 1}, {0.0, kPi / 2}, params()), Error);
}

TEST(Step, HeadingStaysNormalized) {
  VehicleState s{0.0, 0.0, 3.1, 20.0};
  const auto p = params();
  for (int i = 0; i < 100; ++i) {
    s = step(s, {0.0, 0.3}, p);
    EXPECT_GT(s.theta, -kPi);
    EXPECT_LE(s.theta, kPi);
  }
}

TEST(Step, EulerConsistencyUnderRefinement) {
  // One step at dt vs two steps at dt/2 agree to O(dt^2).
  const VehicleState s0{1.0, 2.0, 0.3, 12.0};
  const ControlInput u{0.8, 0.05};
  auto p = params();
  const auto full = step(s0, u, p);
  auto half = p;
  half.dt = 0.05;
  const auto twice = step(step(s0, u, half), u, half);
  const double err = std::hypot(full.x - twice.x, full.y - twice.y);
  EXPECT_LT(err, 0.5 * p.dt * p.dt * 20.0);
}

TEST(Linearize, ZeroSpeedJacobianByInspection) {
  const auto lin = linearize({0.0, 0.0, 0.0, 0.0}, {0.0, 0.0}, params());
  Eigen::Matrix4d expected = Eigen::Matrix4d::Identity();
  expected(0, 3) = 0.1;
  EXPECT_LT((lin.A - expected).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_DOUBLE_EQ(lin.B(3, 0), 0.1);
  EXPECT_DOUBLE_EQ(lin.B(2, 1), 0.0);
}

TEST(Linearize, ResidualMakesAffineModelExact) {
  const VehicleState s{4.0, -1.0, 0.6, 15.0};
  const ControlInput u{1.2, 0.2};
  const auto p = params();
  const auto lin = linearize(s, u, p);
  const auto next = step(s, u, p);
  Eigen::Vector4d xs(s.x, s.y, s.theta, s.v);
  Eigen::Vector2d us(u.a, u.delta);
  const Eigen::Vector4d pred = lin.A * xs + lin.B * us + lin.r;
  EXPECT_NEAR(pred(0), next.x, 1e-12);
  EXPECT_NEAR(pred(1), next.y, 1e-12);
  EXPECT_NEAR(pred(2), next.theta, 1e-12);
  EXPECT_NEAR(pred(3), next.v, 1e-12);
}

TEST(Linearize, JacobiansMatchCentralDifferences) {
  const auto p = params();
  Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState s{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0),
                         rng.uniform(-3.0, 3.0), rng.uniform(0.0, 30.0)};
    const ControlInput u{rng.uniform(-4.0, 4.0), rng.uniform(-0.4, 0.4)};
    const auto lin = linearize(s, u, p);
    const double h = 1e-6;

    // The raw (unnormalized) update that linearize differentiates.
    auto raw = [&](const Eigen::Vector4d& xs, const Eigen::Vector2d& us) {
      Eigen::Vector4d n;
      n << xs(0) + xs(3) * std::cos(xs(2)) * p.dt, xs(1) + xs(3) * std::sin(xs(2)) * p.dt,
          xs(2) + xs(3) / p.wheelbase * std::tan(us(1)) * p.dt, xs(3) + us(0) * p.dt;
      return n;
    };
    Eigen::Vector4d xs(s.x, s.y, s.theta, s.v);
    Eigen::Vector2d us(u.a, u.delta);
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector4d lo = xs, hi = xs;
      lo(j) -= h;
      hi(j) += h;
      const Eigen::Vector4d col = (raw(hi, us) - raw(lo, us)) / (2.0 * h);
      for (int i = 0; i < 4; ++i) EXPECT_NEAR(lin.A(i, j), col(i), 1e-5);
    }
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d lo = us, hi = us;
      lo(j) -= h;
      hi(j) += h;
      const Eigen::Vector4d col = (raw(xs, hi) - raw(xs, lo)) / (2.0 * h);
      for (int i = 0; i < 4; ++i) EXPECT_NEAR(lin.B(i, j), col(i), 1e-5);
    }
  }
}

}  // namespace
