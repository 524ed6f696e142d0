#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "stplan/common.hpp"

namespace stplan {

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // heading, (-pi, pi]
  double v = 0.0;      // longitudinal speed
};

struct ControlInput {
  double a = 0.0;      // acceleration [m/s^2]
  double delta = 0.0;  // steering angle [rad]
};

struct VehicleParams {
  double wheelbase = 2.5;
  double dt = 0.1;
  double delta_max = 0.5;
  double a_max = 4.0;
  double j_max = 10.0;
  double v_min = 0.0;
  double v_max = 30.0;
  double body_length = 4.5;
  double body_width = 1.8;
};

/// One forward-Euler step of the kinematic bicycle model.
inline VehicleState step(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
  if (!(std::abs(u.delta) < 0.5 * kPi))
    throw Error(ErrorCode::SteeringSingular, "steering magnitude must stay below pi/2");
  VehicleState n;
  n.x = s.x + s.v * std::cos(s.theta) * p.dt;
  n.y = s.y + s.v * std::sin(s.theta) * p.dt;
  n.theta = normalize_angle(s.theta + s.v / p.wheelbase * std::tan(u.delta) * p.dt);
  n.v = s.v + u.a * p.dt;
  return n;
}

struct Linearization {
  Eigen::Matrix4d A;
  Eigen::Matrix<double, 4, 2> B;
  Eigen::Vector4d r;  // affine residual: x+ = A x + B u + r
};

/// Analytic Jacobians of `step` about a nominal state/input. The residual r
/// makes the affine model exact at the nominal point.
inline Linearization linearize(const VehicleState& s, const ControlInput& u,
                               const VehicleParams& p) {
  if (!(std::abs(u.delta) < 0.5 * kPi))
    throw Error(ErrorCode::SteeringSingular, "steering magnitude must stay below pi/2");
  const double ct = std::cos(s.theta), st = std::sin(s.theta);
  const double tan_d = std::tan(u.delta);
  const double sec2 = 1.0 + tan_d * tan_d;

  Linearization lin;
  lin.A.setIdentity();
  lin.A(0, 2) = -s.v * st * p.dt;
  lin.A(0, 3) = ct * p.dt;
  lin.A(1, 2) = s.v * ct * p.dt;
  lin.A(1, 3) = st * p.dt;
  lin.A(2, 3) = tan_d / p.wheelbase * p.dt;

  lin.B.setZero();
  lin.B(2, 1) = s.v / p.wheelbase * sec2 * p.dt;
  lin.B(3, 0) = p.dt;

  // Residual from the unnormalized update; the QP operates on the continuous
  // heading, normalization happens when states are replayed.
  Eigen::Vector4d xs(s.x, s.y, s.theta, s.v);
  Eigen::Vector2d us(u.a, u.delta);
  Eigen::Vector4d next;
  next << s.x + s.v * ct * p.dt, s.y + s.v * st * p.dt,
      s.theta + s.v / p.wheelbase * tan_d * p.dt, s.v + u.a * p.dt;
  lin.r = next - lin.A * xs - lin.B * us;
  return lin;
}

}  // namespace stplan
