#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "stplan/common.hpp"
#include "stplan/frenet_path.hpp"
#include "stplan/hazard_field.hpp"
#include "stplan/sampler.hpp"

namespace stplan {

struct CostWeights {
  double w_s = 1.0;
  double w_h = 10.0;
  double w_e = 1.0;
  double w_c = 1.0;
  double w_t = 0.5;
  double w_tr = 2.0;
  double speed_deviation_weight = 0.1;  // weight inside the efficiency term
  double v_target = 15.0;
};

struct FeasibilityLimits {
  double v_min = 0.0;
  double v_max = 30.0;
  double a_l_max = 4.0;
  double a_d_max = 3.0;
  double kappa_max = 0.2;
  double h_max = 10.0;
};

constexpr double kCostDt = 0.02;  // default integration step [s]

namespace detail {

/// Composite trapezoid over the candidate horizon with a uniform step no
/// coarser than dt.
template <typename F>
double trapezoid(double duration, double dt, F&& integrand) {
  const int n = std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-12)));
  const double h = duration / n;
  double sum = 0.5 * (integrand(0.0) + integrand(duration));
  for (int k = 1; k < n; ++k) sum += integrand(static_cast<double>(k) * h);
  return sum * h;
}

inline double candidate_speed(const CandidateTrajectory& c, double t) {
  const double ld = eval_quintic(c.lon, t, 1);
  const double dd = eval_quintic(c.lat, t, 1);
  return std::hypot(ld, dd);
}

/// Curvature of the candidate's Cartesian image. With a reference path the
/// offset-curve derivatives are used; without one, (l, d) is treated as a
/// Cartesian pair (straight reference).
inline double candidate_curvature(const CandidateTrajectory& c, double t,
                                  const ReferencePath* path) {
  const double l = eval_quintic(c.lon, t, 0);
  const double ld = eval_quintic(c.lon, t, 1);
  const double ldd = eval_quintic(c.lon, t, 2);
  const double d = eval_quintic(c.lat, t, 0);
  const double dd_dot = eval_quintic(c.lat, t, 1);
  const double dd_ddot = eval_quintic(c.lat, t, 2);

  double tx, ty, nx, ny;  // components in the local tangent/normal frame
  if (path != nullptr) {
    const double lc = std::min(std::max(l, 0.0), path->total_length());
    const double kappa = path->curvature_at(lc);
    const double kappa_rate = path->curvature_rate_at(lc);
    const double one_m_kd = 1.0 - kappa * d;
    tx = ld * one_m_kd;
    ty = dd_dot;
    nx = ldd * one_m_kd - ld * ld * kappa_rate * d - 2.0 * kappa * ld * dd_dot;
    ny = kappa * ld * ld * one_m_kd + dd_ddot;
  } else {
    tx = ld;
    ty = dd_dot;
    nx = ldd;
    ny = dd_ddot;
  }
  const double speed_sq = tx * tx + ty * ty;
  if (speed_sq < 1e-6) return 0.0;  // curvature undefined near standstill
  return (tx * ny - ty * nx) / (speed_sq * std::sqrt(speed_sq));
}

}  // namespace detail

/// Integral of squared jerk over the candidate.
inline double smoothness_cost(const CandidateTrajectory& c, double dt = kCostDt) {
  return detail::trapezoid(c.duration(), dt, [&](double t) {
    return square(eval_quintic(c.lon, t, 3)) + square(eval_quintic(c.lat, t, 3));
  });
}

/// Integral of the hazard field along the candidate. The ego speed profile
/// feeding the relative-velocity modulation defaults to the candidate's own.
inline double hazard_cost(const CandidateTrajectory& c, const HazardScene& scene,
                          const std::function<double(double)>& ego_v_profile = nullptr,
                          double dt = kCostDt) {
  return detail::trapezoid(c.duration(), dt, [&](double t) {
    const double v = ego_v_profile ? ego_v_profile(t) : detail::candidate_speed(c, t);
    return total_hazard(scene, v, eval_quintic(c.lon, t, 0), eval_quintic(c.lat, t, 0), t);
  });
}

/// Duration plus weighted squared deviation from the target speed.
inline double efficiency_cost(const CandidateTrajectory& c, double v_target,
                              double speed_deviation_weight, double dt = kCostDt) {
  const double deviation = detail::trapezoid(c.duration(), dt, [&](double t) {
    return square(v_target - detail::candidate_speed(c, t));
  });
  return c.duration() + speed_deviation_weight * deviation;
}

/// Integral of squared acceleration.
inline double comfort_cost(const CandidateTrajectory& c, double dt = kCostDt) {
  return detail::trapezoid(c.duration(), dt, [&](double t) {
    return square(eval_quintic(c.lon, t, 2)) + square(eval_quintic(c.lat, t, 2));
  });
}

/// Duration cost, normalized so grid refinement leaves it unchanged.
inline double time_cost(const CandidateTrajectory& c) { return c.duration(); }

using ReferenceSampler = std::function<std::pair<double, double>(double)>;  // tau -> (l, d)

/// Integral of squared Euclidean deviation from a reference trajectory given
/// in the same Frenet frame.
inline double tracking_error(const CandidateTrajectory& c, const ReferenceSampler& ref,
                             double dt = kCostDt) {
  if (!ref) return 0.0;
  return detail::trapezoid(c.duration(), dt, [&](double t) {
    const auto [rl, rd] = ref(t);
    return square(eval_quintic(c.lon, t, 0) - rl) + square(eval_quintic(c.lat, t, 0) - rd);
  });
}

struct FeasibilityResult {
  bool feasible = true;
  Violation violation = Violation::None;
  double at_time = 0.0;
};

/// Samples speed, acceleration, curvature, and hazard limits at step dt.
/// Infeasibility is a result, not an error.
inline FeasibilityResult check_feasibility(const CandidateTrajectory& c,
                                           const FeasibilityLimits& limits,
                                           const HazardScene& scene,
                                           const ReferencePath* path = nullptr,
                                           double dt = kCostDt) {
  const double duration = c.duration();
  const int n = std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-12)));
  const double h = duration / n;
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(duration, static_cast<double>(k) * h);
    const double speed = detail::candidate_speed(c, t);
    if (speed < limits.v_min - 1e-9 || speed > limits.v_max + 1e-9)
      return {false, Violation::Speed, t};
    if (std::abs(eval_quintic(c.lon, t, 2)) > limits.a_l_max + 1e-9)
      return {false, Violation::LonAccel, t};
    if (std::abs(eval_quintic(c.lat, t, 2)) > limits.a_d_max + 1e-9)
      return {false, Violation::LatAccel, t};
    if (std::abs(detail::candidate_curvature(c, t, path)) > limits.kappa_max + 1e-9)
      return {false, Violation::Curvature, t};
    const double hz = total_hazard(scene, speed, eval_quintic(c.lon, t, 0),
                                   eval_quintic(c.lat, t, 0), t);
    if (hz > limits.h_max + 1e-9) return {false, Violation::Hazard, t};
  }
  return {};
}

/// Fills the candidate's cost breakdown (without the feasibility gate).
inline CostBreakdown evaluate_cost(const CandidateTrajectory& c, const CostWeights& w,
                                   const HazardScene& scene,
                                   const ReferenceSampler& ref = nullptr, double dt = kCostDt) {
  CostBreakdown b;
  b.j_s = smoothness_cost(c, dt);
  b.j_h = hazard_cost(c, scene, nullptr, dt);
  b.j_e = efficiency_cost(c, w.v_target, w.speed_deviation_weight, dt);
  b.j_c = comfort_cost(c, dt);
  b.j_t = time_cost(c);
  b.e_t = tracking_error(c, ref, dt);
  b.total = w.w_s * b.j_s + w.w_h * b.j_h + w.w_e * b.j_e + w.w_c * b.j_c + w.w_t * b.j_t +
            w.w_tr * b.e_t;
  return b;
}

/// Evaluates and ranks the candidate set in place; returns the index of the
/// cheapest feasible candidate. Ties keep the earlier grid index.
inline std::size_t select_best(std::vector<CandidateTrajectory>& candidates, const CostWeights& w,
                               const FeasibilityLimits& limits, const HazardScene& scene,
                               const ReferenceSampler& ref = nullptr,
                               const ReferencePath* path = nullptr, double dt = kCostDt) {
  if (candidates.empty()) throw Error(ErrorCode::AllInfeasible, "no candidates to select from");
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& c = candidates[i];
    const auto check = check_feasibility(c, limits, scene, path, dt);
    c.feasible = check.feasible;
    if (!check.feasible) {
      CostBreakdown b;
      b.violated = check.violation;
      c.cost = b;
      continue;
    }
    c.cost = evaluate_cost(c, w, scene, ref, dt);
    if (best == candidates.size() || c.cost->total < candidates[best].cost->total) best = i;
  }
  if (best == candidates.size())
    throw Error(ErrorCode::AllInfeasible, "every candidate violates a constraint");
  return best;
}

}  // namespace stplan
