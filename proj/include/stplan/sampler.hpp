#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stplan/common.hpp"
#include "stplan/quintic.hpp"

namespace stplan {

/// End-state box for candidate generation: final longitudinal position,
/// lateral offset, and maneuver duration.
struct SamplingDomain {
  double l_min = 20.0, l_max = 80.0;
  double d_min = 0.0, d_max = 4.0;
  double tau_min = 2.0, tau_max = 5.0;
  int n_l = 5, n_d = 5, n_tau = 3;

  int grid_size() const { return n_l * n_d * n_tau; }
};

struct EndState {
  double l = 0.0;
  double d = 0.0;
  double tau = 0.0;
  int grid_index = 0;  // lexicographic over (l, d, tau)
};

/// Ego state expressed against the reference path, with the derivatives the
/// boundary-value problems need.
struct FrenetState {
  double l = 0.0, l_dot = 0.0, l_ddot = 0.0;
  double d = 0.0, d_dot = 0.0, d_ddot = 0.0;
};

enum class Violation {
  None,
  Speed,
  LonAccel,
  LatAccel,
  Curvature,
  Hazard,
  Corridor,
};

inline const char* violation_name(Violation v) {
  switch (v) {
    case Violation::None: return "none";
    case Violation::Speed: return "speed";
    case Violation::LonAccel: return "lon_accel";
    case Violation::LatAccel: return "lat_accel";
    case Violation::Curvature: return "curvature";
    case Violation::Hazard: return "hazard";
    case Violation::Corridor: return "corridor";
  }
  return "?";
}

struct CostBreakdown {
  double j_s = 0.0;   // jerk integral
  double j_h = 0.0;   // hazard exposure integral
  double j_e = 0.0;   // duration + weighted speed deviation
  double j_c = 0.0;   // acceleration integral
  double j_t = 0.0;   // duration
  double e_t = 0.0;   // squared tracking deviation integral
  double total = 0.0;
  Violation violated = Violation::None;
};

struct CandidateTrajectory {
  Quintic lon;  // l(t)
  Quintic lat;  // d(t)
  EndState end_state;
  std::optional<CostBreakdown> cost;
  bool feasible = true;

  double duration() const { return lon.t_f - lon.t_i; }
};

/// Full Cartesian grid over the domain, ordered lexicographically (l, then d,
/// then tau). An axis with a single count collapses to its range midpoint.
inline std::vector<EndState> sample_end_states(const SamplingDomain& dom) {
  auto axis = [](double lo, double hi, int n) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(n));
    if (n <= 1) {
      v.push_back(0.5 * (lo + hi));
      return v;
    }
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
    return v;
  };
  const auto ls = axis(dom.l_min, dom.l_max, dom.n_l);
  const auto ds = axis(dom.d_min, dom.d_max, dom.n_d);
  const auto taus = axis(dom.tau_min, dom.tau_max, dom.n_tau);
  std::vector<EndState> out;
  out.reserve(ls.size() * ds.size() * taus.size());
  int index = 0;
  for (double l : ls)
    for (double d : ds)
      for (double tau : taus) out.push_back({l, d, tau, index++});
  return out;
}

struct TerminalPolicy {
  double v_terminal = 0.0;  // longitudinal end speed; lateral ends at rest
};

struct GenerationResult {
  std::vector<CandidateTrajectory> candidates;
  int dropped_ill_conditioned = 0;
};

/// One candidate per sampled end state: the longitudinal quintic meets the
/// terminal-speed policy with zero end acceleration, the lateral quintic ends
/// at rest. Ill-conditioned boundary problems are dropped and counted.
inline GenerationResult generate_candidates(const FrenetState& start, const SamplingDomain& dom,
                                            const TerminalPolicy& policy) {
  GenerationResult out;
  const auto ends = sample_end_states(dom);
  out.candidates.reserve(ends.size());
  for (const auto& e : ends) {
    BoundaryCondition lon_bc{start.l, start.l_dot, start.l_ddot, e.l, policy.v_terminal, 0.0};
    BoundaryCondition lat_bc{start.d, start.d_dot, start.d_ddot, e.d, 0.0, 0.0};
    try {
      CandidateTrajectory c;
      c.lon = solve_quintic(lon_bc, 0.0, e.tau);
      c.lat = solve_quintic(lat_bc, 0.0, e.tau);
      c.end_state = e;
      out.candidates.push_back(std::move(c));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::IllConditioned) throw;
      ++out.dropped_ill_conditioned;
    }
  }
  return out;
}

}  // namespace stplan
