// Independent reference implementations used only by the test suites. These
// deliberately avoid the library's computation paths: plain loops, dense
// sampling, and brute-force search stand in for the analytic routines they
// check.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "stplan/common.hpp"
#include "stplan/st_graph.hpp"

namespace oracles {

/// Arc length of a curve by dense polyline summation.
inline double polyline_length(const std::function<std::pair<double, double>(double)>& curve,
                              double t0, double t1, int samples) {
  double total = 0.0;
  auto prev = curve(t0);
  for (int i = 1; i <= samples; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / samples;
    const auto cur = curve(t);
    total += std::hypot(cur.first - prev.first, cur.second - prev.second);
    prev = cur;
  }
  return total;
}

/// Signed curvature from three nearby points of a positions-only trace.
inline double finite_difference_curvature(const std::function<std::pair<double, double>(double)>& pos,
                                          double s, double h) {
  const auto [xm, ym] = pos(s - h);
  const auto [x0, y0] = pos(s);
  const auto [xp, yp] = pos(s + h);
  const double xd = (xp - xm) / (2.0 * h);
  const double yd = (yp - ym) / (2.0 * h);
  const double xdd = (xp - 2.0 * x0 + xm) / (h * h);
  const double ydd = (yp - 2.0 * y0 + ym) / (h * h);
  const double sp = xd * xd + yd * yd;
  return (xd * ydd - yd * xdd) / (sp * std::sqrt(sp));
}

/// Hand-rolled Gauss-Jordan solve, independent of Eigen's factorizations.
template <int N>
std::array<double, N> gauss_jordan(std::array<std::array<double, N>, N> a, std::array<double, N> b) {
  for (int col = 0; col < N; ++col) {
    int pivot = col;
    for (int r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    const double diag = a[col][col];
    for (int c = col; c < N; ++c) a[col][c] /= diag;
    b[col] /= diag;
    for (int r = 0; r < N; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (int c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  return b;
}

/// Dykstra's alternating projection onto the intersection of halfspaces
/// a_i'x <= b_i and hyperplanes e_j'x = f_j.
inline Eigen::VectorXd dykstra_project(const Eigen::VectorXd& point, const Eigen::MatrixXd& A,
                                       const Eigen::VectorXd& b, const Eigen::MatrixXd& E,
                                       const Eigen::VectorXd& f, int sweeps = 2000) {
  const int m = static_cast<int>(A.rows());
  const int p = static_cast<int>(E.rows());
  Eigen::VectorXd x = point;
  Eigen::MatrixXd corrections = Eigen::MatrixXd::Zero(m + p, x.size());
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double moved = 0.0;
    for (int i = 0; i < m + p; ++i) {
      const Eigen::VectorXd y = x + corrections.row(i).transpose();
      Eigen::VectorXd projected = y;
      if (i < m) {
        const double viol = A.row(i).dot(y) - b(i);
        if (viol > 0.0) projected = y - viol / A.row(i).squaredNorm() * A.row(i).transpose();
      } else {
        const int j = i - m;
        const double viol = E.row(j).dot(y) - f(j);
        projected = y - viol / E.row(j).squaredNorm() * E.row(j).transpose();
      }
      corrections.row(i) = (y - projected).transpose();
      moved += (projected - x).norm();
      x = projected;
    }
    if (moved < 1e-14) break;
  }
  return x;
}

/// Projected gradient descent with Dykstra feasibility restoration; the
/// independent route for small dense QPs.
inline Eigen::VectorXd projected_gradient_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                                             const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                             const Eigen::MatrixXd& E, const Eigen::VectorXd& f,
                                             int max_iters = 200000, double tol = 1e-11) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
  const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-6);
  const double step = 1.0 / lip;
  Eigen::VectorXd x = dykstra_project(Eigen::VectorXd::Zero(c.size()), A, b, E, f);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd next = dykstra_project(x - step * (Q * x + c), A, b, E, f, 400);
    const double delta = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (delta < tol) break;
  }
  return x;
}

/// Exhaustive gap-chain enumeration scored exactly like the library's rule:
/// maximize terminal upper bound, then lexicographic per-step preference for
/// the gap holding (else nearest to, else lowest index) the constant-target
/// position.
struct GapChainOracle {
  std::vector<std::vector<stplan::Interval>> gaps;  // per timestep
  std::vector<double> times;
  double v_min, v_max, v_target, s_now;

  struct Best {
    std::vector<int> chain;
    double terminal = -std::numeric_limits<double>::infinity();
  };

  bool prefer_step(const stplan::Interval& a, int ia, const stplan::Interval& b, int ib,
                   double target) const {
    const bool ca = a.contains(target), cb = b.contains(target);
    if (ca != cb) return ca;
    const double da = a.distance_to(target), db = b.distance_to(target);
    if (da != db) return da < db;
    return ia < ib;
  }

  bool chain_preferred(const std::vector<int>& a, const std::vector<int>& b) const {
    for (std::size_t k = 1; k < a.size(); ++k) {
      if (a[k] == b[k]) continue;
      const double target = s_now + v_target * times[k];
      return prefer_step(gaps[k][static_cast<std::size_t>(a[k])], a[k],
                         gaps[k][static_cast<std::size_t>(b[k])], b[k], target);
    }
    return false;
  }

  void recurse(std::vector<int>& chain, Best& best) const {
    const std::size_t k = chain.size();
    if (k == gaps.size()) {
      const double terminal = gaps.back()[static_cast<std::size_t>(chain.back())].hi;
      if (terminal > best.terminal ||
          (terminal == best.terminal && chain_preferred(chain, best.chain))) {
        best.terminal = terminal;
        best.chain = chain;
      }
      return;
    }
    const auto& prev = gaps[k - 1][static_cast<std::size_t>(chain.back())];
    const double dt = times[1] - times[0];
    const stplan::Interval reach{prev.lo + v_min * dt, prev.hi + v_max * dt};
    for (std::size_t j = 0; j < gaps[k].size(); ++j) {
      if (!reach.overlaps(gaps[k][j])) continue;
      chain.push_back(static_cast<int>(j));
      recurse(chain, best);
      chain.pop_back();
    }
  }

  /// Returns the chosen gap per timestep, or empty when no chain exists.
  std::vector<stplan::Interval> solve() const {
    int start = -1;
    for (std::size_t j = 0; j < gaps[0].size(); ++j)
      if (gaps[0][j].contains(s_now, 1e-9)) start = static_cast<int>(j);
    if (start < 0) return {};
    Best best;
    std::vector<int> chain{start};
    recurse(chain, best);
    if (best.chain.empty()) return {};
    std::vector<stplan::Interval> out;
    for (std::size_t k = 0; k < best.chain.size(); ++k)
      out.push_back(gaps[k][static_cast<std::size_t>(best.chain[k])]);
    return out;
  }
};

}  // namespace oracles
