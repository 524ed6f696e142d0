#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "stplan/common.hpp"

namespace stplan {

/// Fifth-order polynomial over [t_i, t_f]. Coefficients are in local time
/// (t - t_i), which keeps the boundary-value system well conditioned.
struct Quintic {
  std::array<double, 6> b{};
  double t_i = 0.0;
  double t_f = 0.0;

  double duration() const { return t_f - t_i; }
};

/// Position, velocity, and acceleration at both ends of the profiled quantity.
struct BoundaryCondition {
  double g_i = 0.0, g_i_dot = 0.0, g_i_ddot = 0.0;
  double g_f = 0.0, g_f_dot = 0.0, g_f_ddot = 0.0;
};

constexpr double kQuinticMinHorizon = 0.1;     // conditioning floor [s]
constexpr double kQuinticResidualTol = 1e-9;

/// Evaluates the polynomial or one of its first four derivatives.
inline double eval_quintic(const Quintic& q, double t, int order = 0) {
  if (t < q.t_i - 1e-9 || t > q.t_f + 1e-9)
    throw Error(ErrorCode::OutOfRange, "quintic evaluated outside [t_i, t_f]");
  if (order < 0 || order > 4)
    throw Error(ErrorCode::OutOfRange, "derivative order must be in 0..4");
  const double u = std::min(std::max(t - q.t_i, 0.0), q.t_f - q.t_i);
  double acc = 0.0;
  for (int k = 5; k >= order; --k) {
    double factor = 1.0;
    for (int j = 0; j < order; ++j) factor *= static_cast<double>(k - j);
    acc = acc * u + factor * q.b[static_cast<std::size_t>(k)];
  }
  return acc;
}

inline Quintic solve_quintic(const BoundaryCondition& bc, double t_i, double t_f) {
  const double T = t_f - t_i;
  if (!(T >= kQuinticMinHorizon))
    throw Error(ErrorCode::IllConditioned,
                "quintic horizon " + std::to_string(T) + " below conditioning floor");

  Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
  // Rows: value/velocity/acceleration at local time 0 and at T.
  M(0, 0) = 1.0;
  M(1, 1) = 1.0;
  M(2, 2) = 2.0;
  double p = 1.0;
  for (int k = 0; k < 6; ++k) {
    M(3, k) = p;
    M(4, k) = k == 0 ? 0.0 : static_cast<double>(k) * std::pow(T, k - 1);
    M(5, k) = k <= 1 ? 0.0 : static_cast<double>(k * (k - 1)) * std::pow(T, k - 2);
    p *= T;
  }
  Eigen::Matrix<double, 6, 1> rhs;
  rhs << bc.g_i, bc.g_i_dot, bc.g_i_ddot, bc.g_f, bc.g_f_dot, bc.g_f_ddot;

  const Eigen::Matrix<double, 6, 1> sol = M.partialPivLu().solve(rhs);

  Quintic q;
  q.t_i = t_i;
  q.t_f = t_f;
  for (int k = 0; k < 6; ++k) q.b[static_cast<std::size_t>(k)] = sol(k);

  const auto residual = [&](double want, double got) { return std::abs(want - got); };
  const double worst = std::max({
      residual(bc.g_i, eval_quintic(q, t_i, 0)),
      residual(bc.g_i_dot, eval_quintic(q, t_i, 1)),
      residual(bc.g_i_ddot, eval_quintic(q, t_i, 2)),
      residual(bc.g_f, eval_quintic(q, t_f, 0)),
      residual(bc.g_f_dot, eval_quintic(q, t_f, 1)),
      residual(bc.g_f_ddot, eval_quintic(q, t_f, 2)),
  });
  if (worst > kQuinticResidualTol)
    throw Error(ErrorCode::IllConditioned, "boundary residual " + std::to_string(worst));
  return q;
}

}  // namespace stplan
