#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stplan/common.hpp"

namespace stplan {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
};

struct FrenetPoint {
  double l = 0.0;  // arc length along the reference path
  double d = 0.0;  // signed lateral offset, positive left of travel
};

namespace detail {

/// Interpolating cubic spline through (t_k, f_k) with strictly increasing
/// knots and not-a-knot boundaries (third derivative continuous across the
/// first and last interior knots). Natural boundaries flatten the end
/// tangents by O(h * f'') which is too coarse for heading queries at the
/// path ends; not-a-knot keeps the end error at O(h^3).
class CubicSpline1D {
 public:
  CubicSpline1D() = default;

  CubicSpline1D(std::vector<double> knots, const std::vector<double>& values) : t_(std::move(knots)) {
    const std::size_t n = t_.size();
    a_ = values;
    b_.assign(n, 0.0);
    c_.assign(n, 0.0);
    d_.assign(n, 0.0);
    if (n < 3) {
      if (n == 2) b_[0] = b_[1] = (a_[1] - a_[0]) / (t_[1] - t_[0]);
      return;
    }
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t_[i + 1] - t_[i];

    // m[k] = f''(t_k). Half of m is the quadratic coefficient.
    std::vector<double> m(n, 0.0);
    if (n == 3) {
      // Not-a-knot degenerates to the single parabola through three points.
      const double d01 = (a_[1] - a_[0]) / h[0];
      const double d12 = (a_[2] - a_[1]) / h[1];
      const double curv = 2.0 * (d12 - d01) / (h[0] + h[1]);
      m[0] = m[1] = m[2] = curv;
    } else {
      // Eliminate m_0 and m_{n-1} via the not-a-knot relations, then solve a
      // tridiagonal system for the interior second derivatives.
      const std::size_t ni = n - 2;  // unknowns m_1 .. m_{n-2}
      std::vector<double> lower(ni, 0.0), diag(ni, 0.0), upper(ni, 0.0), rhs(ni, 0.0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t r = i - 1;
        lower[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        upper[r] = h[i];
        rhs[r] = 6.0 * ((a_[i + 1] - a_[i]) / h[i] - (a_[i] - a_[i - 1]) / h[i - 1]);
      }
      const double r0 = h[0] / h[1];
      diag[0] += h[0] * (1.0 + r0);
      upper[0] -= h[0] * r0;
      const double r1 = h[n - 2] / h[n - 3];
      diag[ni - 1] += h[n - 2] * (1.0 + r1);
      lower[ni - 1] -= h[n - 2] * r1;

      for (std::size_t r = 1; r < ni; ++r) {
        const double w = lower[r] / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        rhs[r] -= w * rhs[r - 1];
      }
      std::vector<double> sol(ni, 0.0);
      sol[ni - 1] = rhs[ni - 1] / diag[ni - 1];
      for (std::size_t r = ni - 1; r-- > 0;) sol[r] = (rhs[r] - upper[r] * sol[r + 1]) / diag[r];
      for (std::size_t i = 1; i + 1 < n; ++i) m[i] = sol[i - 1];
      m[0] = m[1] + (m[1] - m[2]) * r0;
      m[n - 1] = m[n - 2] + (m[n - 2] - m[n - 3]) * r1;
    }

    for (std::size_t j = 0; j + 1 < n; ++j) {
      d_[j] = (m[j + 1] - m[j]) / (6.0 * h[j]);
      b_[j] = (a_[j + 1] - a_[j]) / h[j] - h[j] * (2.0 * m[j] + m[j + 1]) / 6.0;
      c_[j] = 0.5 * m[j];
    }
  }

  std::size_t segment_of(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(t_.begin(), it));
    if (i > 0) --i;
    if (i + 1 >= t_.size()) i = t_.size() - 2;
    return i;
  }

  double value(double t) const {
    const std::size_t i = segment_of(t);
    const double u = t - t_[i];
    return a_[i] + u * (b_[i] + u * (c_[i] + u * d_[i]));
  }
  double deriv1(double t) const {
    const std::size_t i = segment_of(t);
    const double u = t - t_[i];
    return b_[i] + u * (2.0 * c_[i] + 3.0 * u * d_[i]);
  }
  double deriv2(double t) const {
    const std::size_t i = segment_of(t);
    const double u = t - t_[i];
    return 2.0 * c_[i] + 6.0 * u * d_[i];
  }

  const std::vector<double>& knots() const { return t_; }

 private:
  std::vector<double> t_;
  std::vector<double> a_, b_, c_, d_;
};

}  // namespace detail

/// Arc-length-parameterized reference line built from waypoints. Immutable
/// after construction; all queries are pure.
class ReferencePath {
 public:
  static constexpr double kKnotSpacing = 0.1;          // resampling step [m]
  static constexpr double kProjectionSeedSpacing = 0.5;  // coarse grid step [m]

  ReferencePath() = default;

  double total_length() const { return length_; }
  const std::vector<double>& knots() const { return x_.knots(); }

  void check_range(double sigma) const {
    if (!(sigma >= -1e-9 && sigma <= length_ + 1e-9))
      throw Error(ErrorCode::OutOfRange, "arc length " + std::to_string(sigma) +
                                             " outside [0, " + std::to_string(length_) + "]");
  }

  std::pair<double, double> position_at(double sigma) const {
    check_range(sigma);
    const double s = clamp_sigma(sigma);
    return {x_.value(s), y_.value(s)};
  }

  std::pair<double, double> tangent_at(double sigma) const {
    check_range(sigma);
    const double s = clamp_sigma(sigma);
    return {x_.deriv1(s), y_.deriv1(s)};
  }

  double curvature_at(double sigma) const {
    check_range(sigma);
    const double s = clamp_sigma(sigma);
    const double xd = x_.deriv1(s), yd = y_.deriv1(s);
    const double xdd = x_.deriv2(s), ydd = y_.deriv2(s);
    const double speed_sq = xd * xd + yd * yd;
    return (xd * ydd - yd * xdd) / (speed_sq * std::sqrt(speed_sq));
  }

  /// Central-difference derivative of curvature; used by the candidate
  /// curvature formulas where the spline's third derivative would be needed.
  double curvature_rate_at(double sigma) const {
    check_range(sigma);
    const double h = 1e-4;
    const double lo = std::max(0.0, clamp_sigma(sigma) - h);
    const double hi = std::min(length_, clamp_sigma(sigma) + h);
    if (hi <= lo) return 0.0;
    return (curvature_at(hi) - curvature_at(lo)) / (hi - lo);
  }

  double heading_at(double l) const {
    const auto [xd, yd] = tangent_at(l);
    return normalize_angle(std::atan2(yd, xd));
  }

  std::pair<double, double> frenet_to_cartesian(const FrenetPoint& p) const {
    check_range(p.l);
    const double kappa = curvature_at(p.l);
    if (kappa != 0.0 && std::abs(p.d) >= 1.0 / std::abs(kappa))
      throw Error(ErrorCode::OffsetExceedsRadius,
                  "lateral offset " + std::to_string(p.d) + " exceeds osculating radius");
    const auto [px, py] = position_at(p.l);
    const double phi = heading_at(p.l);
    return {px - p.d * std::sin(phi), py + p.d * std::cos(phi)};
  }

  FrenetPoint cartesian_to_frenet(double x, double y, double corridor = 50.0) const {
    // Coarse seed over the precomputed 0.5 m grid; smaller arc length wins ties.
    double best_d2 = std::numeric_limits<double>::infinity();
    double seed = 0.0;
    for (std::size_t i = 0; i < seed_sigma_.size(); ++i) {
      const double dx = seed_x_[i] - x, dy = seed_y_[i] - y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        seed = seed_sigma_[i];
      }
    }
    if (std::sqrt(best_d2) > corridor)
      throw Error(ErrorCode::PointTooFar, "query point farther than corridor from path");

    // Newton refinement of the squared-distance stationarity condition.
    double sigma = seed;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      const double s = clamp_sigma(sigma);
      const double px = x_.value(s), py = y_.value(s);
      const double xd = x_.deriv1(s), yd = y_.deriv1(s);
      const double xdd = x_.deriv2(s), ydd = y_.deriv2(s);
      const double rx = px - x, ry = py - y;
      const double g = rx * xd + ry * yd;
      const double h = xd * xd + yd * yd + rx * xdd + ry * ydd;
      double step;
      if (std::abs(h) > 1e-12) {
        step = -g / h;
      } else {
        step = (g > 0.0 ? -1.0 : 1.0) * kProjectionSeedSpacing * 0.5;
      }
      if (std::abs(step) > kProjectionSeedSpacing) step = std::copysign(kProjectionSeedSpacing, step);
      double next = sigma + step;
      if (next < 0.0) next = 0.0;
      if (next > length_) next = length_;
      const bool at_boundary = (next == 0.0 && sigma == 0.0 && g > 0.0) ||
                               (next == length_ && sigma == length_ && g < 0.0);
      if (std::abs(next - sigma) < 1e-9 || at_boundary) {
        sigma = next;
        converged = true;
        break;
      }
      sigma = next;
    }
    if (!converged) throw Error(ErrorCode::ProjectionDiverged, "projection Newton did not converge");

    const double s = clamp_sigma(sigma);
    const double px = x_.value(s), py = y_.value(s);
    const double xd = x_.deriv1(s), yd = y_.deriv1(s);
    const double dist = std::hypot(x - px, y - py);
    if (dist > corridor) throw Error(ErrorCode::PointTooFar, "projection farther than corridor");
    // Signed offset: positive on the left of the tangent.
    const double d = xd * (y - py) - yd * (x - px);
    FrenetPoint out;
    out.l = s;
    out.d = std::abs(d) < 1e-15 ? 0.0 : d / std::hypot(xd, yd);
    if (dist < 1e-12) out.d = 0.0;
    return out;
  }

  static ReferencePath build(const std::vector<Waypoint>& waypoints);

 private:
  double clamp_sigma(double s) const { return std::min(std::max(s, 0.0), length_); }

  double length_ = 0.0;
  detail::CubicSpline1D x_, y_;
  std::vector<double> seed_sigma_, seed_x_, seed_y_;
};

namespace detail {

inline double segment_speed(const CubicSpline1D& x, const CubicSpline1D& y, double u) {
  return std::hypot(x.deriv1(u), y.deriv1(u));
}

inline double adaptive_simpson(const CubicSpline1D& x, const CubicSpline1D& y, double a, double b,
                               double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = segment_speed(x, y, lm), frm = segment_speed(x, y, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(x, y, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
         adaptive_simpson(x, y, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

inline double arc_integral(const CubicSpline1D& x, const CubicSpline1D& y, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = segment_speed(x, y, a);
  const double fb = segment_speed(x, y, b);
  const double fm = segment_speed(x, y, 0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(x, y, a, b, fa, fm, fb, whole, tol, 28);
}

}  // namespace detail

inline ReferencePath ReferencePath::build(const std::vector<Waypoint>& waypoints) {
  if (waypoints.size() < 3)
    throw Error(ErrorCode::TooFewWaypoints, "need at least 3 waypoints, got " +
                                                std::to_string(waypoints.size()));
  for (const auto& w : waypoints)
    if (!std::isfinite(w.x) || !std::isfinite(w.y))
      throw Error(ErrorCode::DegenerateWaypoints, "non-finite waypoint");

  // Chord-length parameter.
  std::vector<double> u(waypoints.size(), 0.0);
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    const double step = std::hypot(waypoints[k].x - waypoints[k - 1].x,
                                   waypoints[k].y - waypoints[k - 1].y);
    if (step <= 1e-9)
      throw Error(ErrorCode::DegenerateWaypoints, "duplicate consecutive waypoints at index " +
                                                      std::to_string(k));
    u[k] = u[k - 1] + step;
  }

  std::vector<double> wx(waypoints.size()), wy(waypoints.size());
  for (std::size_t k = 0; k < waypoints.size(); ++k) {
    wx[k] = waypoints[k].x;
    wy[k] = waypoints[k].y;
  }
  detail::CubicSpline1D sx(u, wx), sy(u, wy);

  // Cumulative arc length at the chord knots.
  const double seg_tol = 1e-8 / static_cast<double>(u.size());
  std::vector<double> cum(u.size(), 0.0);
  for (std::size_t k = 1; k < u.size(); ++k)
    cum[k] = cum[k - 1] + detail::arc_integral(sx, sy, u[k - 1], u[k], seg_tol);
  const double total = cum.back();

  auto arc_at = [&](double uu) {
    const auto it = std::upper_bound(u.begin(), u.end(), uu);
    std::size_t k = static_cast<std::size_t>(std::distance(u.begin(), it));
    if (k > 0) --k;
    if (k + 1 >= u.size()) k = u.size() - 2;
    return cum[k] + detail::arc_integral(sx, sy, u[k], std::min(uu, u.back()), seg_tol);
  };

  auto invert_arc = [&](double sigma) {
    if (sigma <= 0.0) return u.front();
    if (sigma >= total) return u.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), sigma);
    std::size_t k = static_cast<std::size_t>(std::distance(cum.begin(), it));
    if (k > 0) --k;
    if (k + 1 >= u.size()) k = u.size() - 2;
    double lo = u[k], hi = u[k + 1];
    double uu = lo + (hi - lo) * (sigma - cum[k]) / std::max(cum[k + 1] - cum[k], 1e-300);
    for (int it2 = 0; it2 < 60; ++it2) {
      const double err = arc_at(uu) - sigma;
      if (std::abs(err) < 1e-12) break;
      if (err > 0.0) hi = uu; else lo = uu;
      const double speed = detail::segment_speed(sx, sy, uu);
      double next = uu - err / std::max(speed, 1e-9);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      uu = next;
    }
    return uu;
  };

  // Arc-length knot set: regular grid plus the exact waypoint stations so the
  // resampled spline still interpolates every input point.
  std::vector<double> sigmas;
  for (double s = 0.0; s < total; s += kKnotSpacing) sigmas.push_back(s);
  sigmas.push_back(total);
  for (std::size_t k = 0; k < u.size(); ++k) sigmas.push_back(std::min(cum[k], total));
  std::sort(sigmas.begin(), sigmas.end());
  std::vector<double> knots;
  for (double s : sigmas) {
    if (!knots.empty() && s - knots.back() < 1e-4) continue;
    knots.push_back(s);
  }
  if (knots.back() < total - 1e-12) knots.push_back(total);
  // Waypoint stations win over nearby grid knots.
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double target = std::min(cum[k], total);
    auto it = std::min_element(knots.begin(), knots.end(), [&](double a, double b) {
      return std::abs(a - target) < std::abs(b - target);
    });
    *it = target;
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              knots.end());

  std::vector<double> px(knots.size()), py(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double uu = invert_arc(knots[i]);
    px[i] = sx.value(uu);
    py[i] = sy.value(uu);
  }

  ReferencePath path;
  path.length_ = total;
  path.x_ = detail::CubicSpline1D(knots, px);
  path.y_ = detail::CubicSpline1D(knots, py);

  for (double s = 0.0; s <= total; s += kProjectionSeedSpacing) {
    path.seed_sigma_.push_back(s);
    path.seed_x_.push_back(path.x_.value(s));
    path.seed_y_.push_back(path.y_.value(s));
  }
  if (path.seed_sigma_.back() < total) {
    path.seed_sigma_.push_back(total);
    path.seed_x_.push_back(path.x_.value(total));
    path.seed_y_.push_back(path.y_.value(total));
  }
  return path;
}

inline std::vector<Waypoint> parse_waypoints(std::istream& in) {
  std::vector<Waypoint> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double x, y;
    if (ss >> x) {
      if (!(ss >> y))
        throw Error(ErrorCode::IoError, "waypoint line " + std::to_string(lineno) + " missing y");
      out.push_back({x, y});
    }
  }
  return out;
}

inline std::vector<Waypoint> load_waypoints(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw Error(ErrorCode::IoError, "cannot open waypoint file " + filename);
  return parse_waypoints(in);
}

}  // namespace stplan
