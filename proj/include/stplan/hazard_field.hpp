#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "stplan/common.hpp"
#include "stplan/obstacle.hpp"

namespace stplan {

/// Anisotropic Gaussian risk source for immobile obstacles and road-boundary
/// points.
struct StaticHazardSource {
  double l = 0.0;     // center, longitudinal [m]
  double d = 0.0;     // center, lateral [m]
  double peak = 1.0;  // hazard at the center
  double eta_l = 1.0; // longitudinal spread [m]
  double eta_d = 1.0; // lateral spread [m]
};

/// Moving risk source following a predicted track. The Gaussian footprint
/// scales with closing speed and a logistic gate attenuates the field behind
/// the obstacle.
struct DynamicHazardSource {
  PredictedTrack track;
  double peak = 1.0;
  double zeta0 = 3.0;     // base footprint scale [m]
  double k_zeta = 0.2;    // footprint growth per m/s of |relative speed| [s]
  double lambda0 = 1.0;   // base gate sharpness [1/m]
  double k_lambda = 0.1;  // gate softening per m/s of |relative speed| [s/m]
  double length = 4.5;    // obstacle length [m]
  double beta = 1.5;      // gate midpoint in obstacle lengths
};

struct HazardScene {
  std::vector<StaticHazardSource> statics;
  std::vector<DynamicHazardSource> dynamics;
  double h_max = 10.0;

  /// Sorts static sources by l so point queries can window the sum. Call once
  /// after assembling the scene; queries work either way.
  void build_index() {
    std::stable_sort(statics.begin(), statics.end(),
                     [](const StaticHazardSource& a, const StaticHazardSource& b) { return a.l < b.l; });
    max_eta_l_ = 0.0;
    for (const auto& s : statics) max_eta_l_ = std::max(max_eta_l_, s.eta_l);
    indexed_ = true;
  }

  bool indexed() const { return indexed_; }
  double max_eta_l() const { return max_eta_l_; }

 private:
  bool indexed_ = false;
  double max_eta_l_ = 0.0;
};

namespace detail {

inline double gaussian_term(const StaticHazardSource& s, double l, double d) {
  const double el = (l - s.l) / s.eta_l;
  const double ed = (d - s.d) / s.eta_d;
  return s.peak * std::exp(-0.5 * el * el - 0.5 * ed * ed);
}

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

inline double static_hazard(const HazardScene& scene, double l, double d) {
  double sum = 0.0;
  if (scene.indexed() && !scene.statics.empty()) {
    // Terms beyond 12 spreads contribute < 1e-31 of a peak; skip them.
    const double window = 12.0 * scene.max_eta_l();
    auto lo = std::lower_bound(scene.statics.begin(), scene.statics.end(), l - window,
                               [](const StaticHazardSource& s, double v) { return s.l < v; });
    for (auto it = lo; it != scene.statics.end() && it->l <= l + window; ++it)
      sum += detail::gaussian_term(*it, l, d);
    return sum;
  }
  for (const auto& s : scene.statics) sum += detail::gaussian_term(s, l, d);
  return sum;
}

inline double dynamic_hazard(const HazardScene& scene, double ego_v, double l, double d, double tau) {
  double sum = 0.0;
  for (const auto& src : scene.dynamics) {
    const TrackSample s = src.track.at(tau);
    const double u_rel = ego_v - s.v;
    const double zeta = src.zeta0 * (1.0 + src.k_zeta * std::abs(u_rel));
    const double lambda = src.lambda0 / (1.0 + src.k_lambda * std::abs(u_rel));
    const double dl = l - s.l;
    const double dd = d - s.d;
    const double numerator = src.peak * std::exp(-(dl * dl + dd * dd) / (2.0 * zeta * zeta));
    sum += numerator * detail::logistic(lambda * (dl - src.beta * src.length));
  }
  return sum;
}

inline double total_hazard(const HazardScene& scene, double ego_v, double l, double d, double tau) {
  return static_hazard(scene, l, d) + dynamic_hazard(scene, ego_v, l, d, tau);
}

struct HazardGrid {
  std::vector<double> values;  // row-major, rows over d, columns over l
  std::size_t n_l = 0;
  std::size_t n_d = 0;
  double l_min = 0.0, d_min = 0.0;
  double cell_l = 0.0, cell_d = 0.0;  // effective cell sizes; the grid tiles the ranges exactly

  double l_center(std::size_t j) const { return l_min + (static_cast<double>(j) + 0.5) * cell_l; }
  double d_center(std::size_t i) const { return d_min + (static_cast<double>(i) + 0.5) * cell_d; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_l + j]; }
};

inline HazardGrid hazard_grid(const HazardScene& scene, double ego_v, Interval l_range,
                              Interval d_range, double resolution, double tau) {
  if (!(resolution > 0.0) || l_range.width() < 0.0 || d_range.width() < 0.0)
    throw Error(ErrorCode::EmptyRange, "hazard grid needs positive resolution and non-empty ranges");
  HazardGrid g;
  g.l_min = l_range.lo;
  g.d_min = d_range.lo;
  g.n_l = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(l_range.width() / resolution)));
  g.n_d = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(d_range.width() / resolution)));
  g.cell_l = l_range.width() / static_cast<double>(g.n_l);
  g.cell_d = d_range.width() / static_cast<double>(g.n_d);
  g.values.resize(g.n_l * g.n_d);
  for (std::size_t i = 0; i < g.n_d; ++i)
    for (std::size_t j = 0; j < g.n_l; ++j)
      g.values[i * g.n_l + j] = total_hazard(scene, ego_v, g.l_center(j), g.d_center(i), tau);
  return g;
}

/// Places a row of boundary sources along d = d_offset between l_start and
/// l_end at the given spacing.
inline void add_boundary_hazard(HazardScene& scene, double d_offset, double l_start, double l_end,
                                double peak, double spacing = 2.0, double eta_l = 2.0,
                                double eta_d = 0.3) {
  for (double l = l_start; l <= l_end + 1e-9; l += spacing)
    scene.statics.push_back({l, d_offset, peak, eta_l, eta_d});
}

}  // namespace stplan
