#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "stplan/common.hpp"
#include "stplan/rng.hpp"

namespace stplan {

enum class DrivingStyle { Normal, Aggressive, Uncertain };

inline const char* style_name(DrivingStyle s) {
  switch (s) {
    case DrivingStyle::Normal: return "normal";
    case DrivingStyle::Aggressive: return "aggressive";
    case DrivingStyle::Uncertain: return "uncertain";
  }
  return "?";
}

struct ObstacleState {
  double s0 = 0.0;      // initial longitudinal position on its own lane reference [m]
  double v0 = 0.0;      // initial speed [m/s], >= 0
  double a0 = 0.0;      // initial acceleration [m/s^2] (aggressive style)
  double d0 = 0.0;      // lateral offset, held constant [m]
  double length = 4.5;  // footprint length [m]
  double width = 1.8;   // footprint width [m]
  DrivingStyle style = DrivingStyle::Normal;
  std::uint64_t seed = 0;  // drives the uncertain-style acceleration sequence
};

struct TrackSample {
  double tau = 0.0;  // seconds from prediction start
  double l = 0.0;
  double d = 0.0;
  double v = 0.0;
};

struct PredictedTrack {
  std::vector<TrackSample> samples;
  double dt = 0.0;

  double horizon() const { return samples.empty() ? 0.0 : samples.back().tau; }

  /// Linear interpolation between samples; throws outside the horizon.
  TrackSample at(double tau) const {
    if (samples.empty() || tau < -1e-9 || tau > horizon() + 1e-9)
      throw Error(ErrorCode::TauOutOfHorizon,
                  "tau " + std::to_string(tau) + " outside track horizon");
    if (tau <= 0.0) return samples.front();
    if (tau >= horizon()) return samples.back();
    const double f = tau / dt;
    std::size_t i = static_cast<std::size_t>(f);
    if (i + 1 >= samples.size()) i = samples.size() - 2;
    const double w = (tau - samples[i].tau) / (samples[i + 1].tau - samples[i].tau);
    TrackSample out;
    out.tau = tau;
    out.l = samples[i].l + w * (samples[i + 1].l - samples[i].l);
    out.d = samples[i].d + w * (samples[i + 1].d - samples[i].d);
    out.v = samples[i].v + w * (samples[i + 1].v - samples[i].v);
    return out;
  }
};

namespace detail {

constexpr double kUncertainPiece = 0.5;   // acceleration resample period [s]
constexpr double kUncertainAccelMax = 2.0;
constexpr double kUncertainSpeedMax = 40.0;

/// Exact integration of piecewise-constant acceleration with speed clamped to
/// [0, vmax]; returns (position, speed) after advancing `duration` from (s, v).
inline void advance_clamped(double& s, double& v, double a, double duration, double vmax) {
  double remaining = duration;
  if (a != 0.0) {
    const double bound = a > 0.0 ? vmax : 0.0;
    double t_hit = (bound - v) / a;
    if (t_hit < 0.0) t_hit = 0.0;
    const double t1 = std::min(t_hit, remaining);
    s += v * t1 + 0.5 * a * t1 * t1;
    v += a * t1;
    remaining -= t1;
    if (remaining > 0.0) v = bound;
  }
  s += v * remaining;
}

inline void uncertain_state(const ObstacleState& o, double t, double& s_out, double& v_out) {
  double s = o.s0;
  double v = std::min(std::max(o.v0, 0.0), kUncertainSpeedMax);
  const std::uint64_t full_pieces = static_cast<std::uint64_t>(t / kUncertainPiece);
  for (std::uint64_t k = 0; k < full_pieces; ++k) {
    const double a = uniform_from_counter(o.seed, k, -kUncertainAccelMax, kUncertainAccelMax);
    advance_clamped(s, v, a, kUncertainPiece, kUncertainSpeedMax);
  }
  const double rest = t - static_cast<double>(full_pieces) * kUncertainPiece;
  if (rest > 0.0) {
    const double a =
        uniform_from_counter(o.seed, full_pieces, -kUncertainAccelMax, kUncertainAccelMax);
    advance_clamped(s, v, a, rest, kUncertainSpeedMax);
  }
  s_out = s;
  v_out = v;
}

}  // namespace detail

/// Predicted speed at time t under the obstacle's driving style; never
/// negative.
inline double predict_speed(const ObstacleState& o, double t) {
  if (t < 0.0) throw Error(ErrorCode::NegativeTime, "prediction time must be >= 0");
  switch (o.style) {
    case DrivingStyle::Normal:
      return o.v0;
    case DrivingStyle::Aggressive:
      return std::max(0.0, o.v0 + o.a0 * t);
    case DrivingStyle::Uncertain: {
      double s, v;
      detail::uncertain_state(o, t, s, v);
      return v;
    }
  }
  return 0.0;
}

inline double predict_position(const ObstacleState& o, double t) {
  if (t < 0.0) throw Error(ErrorCode::NegativeTime, "prediction time must be >= 0");
  switch (o.style) {
    case DrivingStyle::Normal:
      return o.s0 + o.v0 * t;
    case DrivingStyle::Aggressive: {
      if (o.a0 < 0.0) {
        const double t_stop = o.v0 / -o.a0;
        if (t >= t_stop) return o.s0 + o.v0 * t_stop + 0.5 * o.a0 * t_stop * t_stop;
      }
      return o.s0 + o.v0 * t + 0.5 * o.a0 * t * t;
    }
    case DrivingStyle::Uncertain: {
      double s, v;
      detail::uncertain_state(o, t, s, v);
      return s;
    }
  }
  return o.s0;
}

inline PredictedTrack predict_track(const ObstacleState& o, double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon)
    throw Error(ErrorCode::InvalidHorizon, "need horizon > 0 and 0 < dt <= horizon");
  PredictedTrack track;
  track.dt = dt;
  const std::size_t n = static_cast<std::size_t>(std::floor(horizon / dt)) + 1;
  track.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = static_cast<double>(k) * dt;
    TrackSample s;
    s.tau = tau;
    s.l = predict_position(o, tau);
    s.d = o.d0;
    s.v = predict_speed(o, tau);
    track.samples.push_back(s);
  }
  return track;
}

/// Ego speed minus obstacle speed; positive when the ego closes from behind.
inline double relative_velocity(const ObstacleState& o, double ego_v, double t) {
  return ego_v - predict_speed(o, t);
}

}  // namespace stplan
