#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "stplan/common.hpp"
#include "stplan/obstacle.hpp"

namespace stplan {

/// Time-dependent uncertainty buffer around predicted obstacle positions.
inline double buffer_at(double t, double eps0, double eps_rate) {
  return eps0 + eps_rate * t;
}

/// Maps an obstacle's own-lane motion onto the ego path's arc length.
///
/// Band: the obstacle travels a lane whose stations correspond affinely to
/// ego stations (slope +1 same direction, -1 oncoming); `active` gates the
/// conflict window, e.g. by lateral overlap with the ego's planned profile.
/// Zone: the obstacle crosses the ego path; it blocks a fixed ego interval
/// while its footprint occupies the conflict zone on its own path.
class ConflictProjection {
 public:
  static ConflictProjection none() { return ConflictProjection(); }

  static ConflictProjection band(double offset, double slope,
                                 std::function<bool(double)> active = nullptr) {
    ConflictProjection p;
    p.kind_ = Kind::Band;
    p.offset_ = offset;
    p.slope_ = slope;
    p.active_ = std::move(active);
    return p;
  }

  static ConflictProjection zone(Interval own_zone, Interval ego_zone) {
    ConflictProjection p;
    p.kind_ = Kind::Zone;
    p.own_zone_ = own_zone;
    p.ego_zone_ = ego_zone;
    return p;
  }

  /// Blocked ego interval at time t for an obstacle centered at own-lane
  /// station s with half-length `half_len`, buffered by eps (already includes
  /// any ego inflation).
  std::optional<Interval> blocked(double t, double s, double half_len, double eps) const {
    switch (kind_) {
      case Kind::None:
        return std::nullopt;
      case Kind::Band: {
        if (active_ && !active_(t)) return std::nullopt;
        const double center = offset_ + slope_ * s;
        const double hw = eps + half_len;
        return Interval{center - hw, center + hw};
      }
      case Kind::Zone: {
        const Interval footprint{s - half_len, s + half_len};
        if (!footprint.overlaps(own_zone_)) return std::nullopt;
        return Interval{ego_zone_.lo - eps, ego_zone_.hi + eps};
      }
    }
    return std::nullopt;
  }

 private:
  enum class Kind { None, Band, Zone };
  Kind kind_ = Kind::None;
  double offset_ = 0.0;
  double slope_ = 1.0;
  std::function<bool(double)> active_;
  Interval own_zone_{}, ego_zone_{};
};

struct StSample {
  double t = 0.0;
  double s_min = 0.0;
  double s_max = 0.0;
};

struct StRegion {
  int obstacle_id = 0;
  std::vector<StSample> samples;  // strictly increasing t; may skip inactive times

  bool empty() const { return samples.empty(); }
};

/// Blocked band of one obstacle on the ego path over [0, T_max], sampled at
/// dt. The buffer grows with time and the obstacle's half length plus any
/// extra inflation (typically half the ego length) widens it on both sides.
inline StRegion build_region(const ObstacleState& o, const ConflictProjection& proj, double T_max,
                             double dt, double eps0, double eps_rate, double extra_inflation = 0.0,
                             int obstacle_id = 0) {
  if (!(T_max > 0.0) || !(dt > 0.0) || dt > T_max)
    throw Error(ErrorCode::InvalidHorizon, "need T_max > 0 and 0 < dt <= T_max");
  StRegion region;
  region.obstacle_id = obstacle_id;
  const std::size_t n = static_cast<std::size_t>(std::floor(T_max / dt + 1e-9)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double s = predict_position(o, t);
    const double eps = buffer_at(t, eps0, eps_rate) + extra_inflation;
    const auto blocked = proj.blocked(t, s, 0.5 * o.length, eps);
    if (!blocked) continue;
    Interval iv = *blocked;
    if (iv.lo > iv.hi) std::swap(iv.lo, iv.hi);
    region.samples.push_back({t, iv.lo, iv.hi});
  }
  return region;
}

/// Per-timestep union of blocked intervals.
struct BlockedTimeline {
  std::vector<double> times;
  std::vector<std::vector<Interval>> blocked;  // sorted, disjoint per timestep
};

inline BlockedTimeline aggregate(const std::vector<StRegion>& regions, double T_max, double dt) {
  BlockedTimeline out;
  const std::size_t n = static_cast<std::size_t>(std::floor(T_max / dt + 1e-9)) + 1;
  out.times.resize(n);
  out.blocked.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.times[k] = static_cast<double>(k) * dt;
  for (const auto& region : regions) {
    for (const auto& s : region.samples) {
      const std::size_t k = static_cast<std::size_t>(std::llround(s.t / dt));
      if (k >= n || std::abs(out.times[k] - s.t) > 1e-6) continue;
      out.blocked[k].push_back({s.s_min, s.s_max});
    }
  }
  for (auto& list : out.blocked) {
    std::sort(list.begin(), list.end(), [](const Interval& a, const Interval& b) {
      return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
    });
    std::vector<Interval> merged;
    for (const auto& iv : list) {
      if (!merged.empty() && iv.lo <= merged.back().hi) {
        merged.back().hi = std::max(merged.back().hi, iv.hi);
      } else {
        merged.push_back(iv);
      }
    }
    list = std::move(merged);
  }
  return out;
}

/// Complement of the blocked set within the domain at one timestep.
inline std::vector<Interval> free_gaps(const std::vector<Interval>& blocked, Interval domain) {
  std::vector<Interval> gaps;
  double cursor = domain.lo;
  for (const auto& iv : blocked) {
    if (iv.hi < domain.lo || iv.lo > domain.hi) continue;
    const double lo = std::max(iv.lo, domain.lo);
    if (lo - cursor > 1e-9) gaps.push_back({cursor, lo});
    cursor = std::max(cursor, std::min(iv.hi, domain.hi));
  }
  if (domain.hi - cursor > 1e-9) gaps.push_back({cursor, domain.hi});
  return gaps;
}

struct SafeCorridor {
  std::vector<double> times;
  std::vector<Interval> bounds;
  double dt = 0.0;

  double horizon() const { return times.empty() ? 0.0 : times.back(); }

  /// Conservative bounds at an arbitrary time inside the horizon: between two
  /// grid samples the tighter of the neighbours applies.
  Interval bounds_at(double t) const {
    if (times.empty()) throw Error(ErrorCode::CorridorGap, "empty corridor");
    if (t <= times.front()) return bounds.front();
    if (t >= times.back()) return bounds.back();
    const double f = (t - times.front()) / dt;
    std::size_t k = static_cast<std::size_t>(f);
    if (k + 1 >= times.size()) k = times.size() - 2;
    if (std::abs(t - times[k]) < 1e-9) return bounds[k];
    if (std::abs(t - times[k + 1]) < 1e-9) return bounds[k + 1];
    return Interval{std::max(bounds[k].lo, bounds[k + 1].lo),
                    std::min(bounds[k].hi, bounds[k + 1].hi)};
  }
};

struct GapSelection {
  double v_min = 0.0;
  double v_max = 30.0;
  double v_target = 15.0;
};

namespace detail {

/// Preference order for gaps at one timestep: containing the constant-target
/// position beats proximity to it, then the lower index.
inline bool gap_preferred(const Interval& a, int ia, const Interval& b, int ib, double target) {
  const bool ca = a.contains(target), cb = b.contains(target);
  if (ca != cb) return ca;
  const double da = a.distance_to(target), db = b.distance_to(target);
  if (da != db) return da < db;
  return ia < ib;
}

inline Interval reachable_shift(const Interval& gap, double v_min, double v_max, double dt) {
  return Interval{gap.lo + v_min * dt, gap.hi + v_max * dt};
}

}  // namespace detail

/// Chooses one free interval per timestep: a gap chain connected under
/// constant-speed transitions in [v_min, v_max], starting at the gap holding
/// s_now and maximizing the terminal upper bound. Ties prefer gaps around the
/// constant-target-speed position.
inline SafeCorridor safe_corridor(const BlockedTimeline& blocked, double s_now, Interval s_domain,
                                  const GapSelection& sel) {
  const std::size_t n = blocked.times.size();
  if (n == 0) throw Error(ErrorCode::NoFeasibleCorridor, "empty timeline");
  const double dt = n > 1 ? blocked.times[1] - blocked.times[0] : 0.0;

  std::vector<std::vector<Interval>> gaps(n);
  for (std::size_t k = 0; k < n; ++k) gaps[k] = free_gaps(blocked.blocked[k], s_domain);

  int start = -1;
  for (std::size_t j = 0; j < gaps[0].size(); ++j)
    if (gaps[0][j].contains(s_now, 1e-9)) start = static_cast<int>(j);
  if (start < 0)
    throw Error(ErrorCode::NoFeasibleCorridor, "current position is inside a blocked region");

  // Backward sweep: best achievable terminal upper bound from each gap.
  constexpr double kDead = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> score(n);
  for (std::size_t k = 0; k < n; ++k) score[k].assign(gaps[k].size(), kDead);
  for (std::size_t j = 0; j < gaps[n - 1].size(); ++j) score[n - 1][j] = gaps[n - 1][j].hi;
  for (std::size_t k = n - 1; k-- > 0;) {
    for (std::size_t j = 0; j < gaps[k].size(); ++j) {
      const Interval reach = detail::reachable_shift(gaps[k][j], sel.v_min, sel.v_max, dt);
      for (std::size_t h = 0; h < gaps[k + 1].size(); ++h) {
        if (score[k + 1][h] == kDead) continue;
        if (reach.overlaps(gaps[k + 1][h])) score[k][j] = std::max(score[k][j], score[k + 1][h]);
      }
    }
  }
  if (score[0][static_cast<std::size_t>(start)] == kDead)
    throw Error(ErrorCode::NoFeasibleCorridor, "no gap chain spans the horizon");

  // Forward selection among optimal successors.
  SafeCorridor corridor;
  corridor.dt = dt;
  corridor.times = blocked.times;
  corridor.bounds.resize(n);
  std::size_t current = static_cast<std::size_t>(start);
  corridor.bounds[0] = gaps[0][current];
  double best = score[0][current];
  for (std::size_t k = 1; k < n; ++k) {
    const Interval reach =
        detail::reachable_shift(gaps[k - 1][current], sel.v_min, sel.v_max, dt);
    const double target = s_now + sel.v_target * blocked.times[k];
    int chosen = -1;
    for (std::size_t h = 0; h < gaps[k].size(); ++h) {
      if (score[k][h] != best) continue;
      if (!reach.overlaps(gaps[k][h])) continue;
      if (chosen < 0 || detail::gap_preferred(gaps[k][h], static_cast<int>(h),
                                              gaps[k][static_cast<std::size_t>(chosen)], chosen,
                                              target))
        chosen = static_cast<int>(h);
    }
    if (chosen < 0)
      throw Error(ErrorCode::NoFeasibleCorridor, "gap chain broke during forward selection");
    current = static_cast<std::size_t>(chosen);
    corridor.bounds[k] = gaps[k][current];
  }
  return corridor;
}

/// Writes t, corridor bounds, and the blocked intervals per timestep.
inline void write_st_csv(std::ostream& os, const BlockedTimeline& blocked,
                         const SafeCorridor& corridor) {
  os << "t,corridor_lo,corridor_hi,blocked\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < blocked.times.size(); ++k) {
    os << fmt(blocked.times[k]) << ',' << fmt(corridor.bounds[k].lo) << ','
       << fmt(corridor.bounds[k].hi) << ',';
    for (std::size_t i = 0; i < blocked.blocked[k].size(); ++i) {
      if (i) os << ';';
      os << fmt(blocked.blocked[k][i].lo) << ':' << fmt(blocked.blocked[k][i].hi);
    }
    os << '\n';
  }
}

}  // namespace stplan
