#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "stplan/common.hpp"

namespace stplan {

/// Dense convex QP: minimize 0.5 x'Qx + c'x subject to A_ineq x <= b_ineq and
/// A_eq x = b_eq.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;

  int num_vars() const { return static_cast<int>(Q.rows()); }
  int num_ineq() const { return static_cast<int>(A_ineq.rows()); }
  int num_eq() const { return static_cast<int>(A_eq.rows()); }
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

inline const char* qp_status_name(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

struct QpSolution {
  Eigen::VectorXd theta;
  double objective = 0.0;
  QpStatus status = QpStatus::Infeasible;
  double kkt_residual = 0.0;
  std::vector<int> active_set;  // binding inequality indices, ascending
  Eigen::VectorXd mult_ineq;
  Eigen::VectorXd mult_eq;
  int iterations = 0;
};

struct QpWarmStart {
  Eigen::VectorXd point;
  std::vector<int> active_set;
};

constexpr int kQpMaxIterations = 1000;
constexpr double kQpTol = 1e-8;

/// Max-norm KKT residual over stationarity, primal feasibility, dual
/// feasibility, and complementary slackness.
inline double kkt_residual(const QpProblem& p, const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& mult_ineq, const Eigen::VectorXd& mult_eq) {
  Eigen::VectorXd stat = p.Q * theta + p.c;
  if (p.num_ineq() > 0) stat += p.A_ineq.transpose() * mult_ineq;
  if (p.num_eq() > 0) stat += p.A_eq.transpose() * mult_eq;
  double r = stat.lpNorm<Eigen::Infinity>();
  if (p.num_ineq() > 0) {
    const Eigen::VectorXd slack = p.A_ineq * theta - p.b_ineq;
    r = std::max(r, slack.maxCoeff());                       // primal
    r = std::max(r, (-mult_ineq).maxCoeff());                // dual
    r = std::max(r, slack.cwiseProduct(mult_ineq).cwiseAbs().maxCoeff());  // complementarity
  }
  if (p.num_eq() > 0)
    r = std::max(r, (p.A_eq * theta - p.b_eq).lpNorm<Eigen::Infinity>());
  return std::max(r, 0.0);
}

namespace detail {

inline void validate_problem(const QpProblem& p) {
  const int n = p.num_vars();
  if (p.Q.rows() != p.Q.cols() || p.c.size() != n)
    throw Error(ErrorCode::BadProblem, "cost dimensions inconsistent");
  if (p.A_ineq.rows() != p.b_ineq.size() || (p.num_ineq() > 0 && p.A_ineq.cols() != n))
    throw Error(ErrorCode::BadProblem, "inequality dimensions inconsistent");
  if (p.A_eq.rows() != p.b_eq.size() || (p.num_eq() > 0 && p.A_eq.cols() != n))
    throw Error(ErrorCode::BadProblem, "equality dimensions inconsistent");
  if (((p.Q - p.Q.transpose()).lpNorm<Eigen::Infinity>()) > 1e-10)
    throw Error(ErrorCode::BadProblem, "cost matrix is not symmetric");
  if (p.num_eq() > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(p.A_eq);
    if (lu.rank() < p.num_eq())
      throw Error(ErrorCode::BadProblem, "equality rows are linearly dependent");
  }
}

/// Enforces positive semidefiniteness; marginally indefinite problems get a
/// tiny diagonal shift.
inline void regularize(Eigen::MatrixXd& Q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-8) throw Error(ErrorCode::BadProblem, "cost matrix is indefinite");
  if (min_eig < 1e-9) Q += 1e-9 * Eigen::MatrixXd::Identity(Q.rows(), Q.cols());
}

struct WorkingSet {
  std::vector<int> rows;  // inequality indices in addition order

  bool contains(int i) const { return std::find(rows.begin(), rows.end(), i) != rows.end(); }
};

/// Solves the equality-constrained subproblem for step p and multipliers:
/// [Q A'; A 0] [p; lambda] = [-g; a_rhs]. Returns false when the KKT system
/// is singular.
inline bool solve_kkt(const Eigen::MatrixXd& Q, const Eigen::VectorXd& g,
                      const Eigen::MatrixXd& A_act, Eigen::VectorXd& p_out,
                      Eigen::VectorXd& lambda_out, const Eigen::VectorXd* a_rhs = nullptr) {
  const int n = static_cast<int>(Q.rows());
  const int m = static_cast<int>(A_act.rows());
  Eigen::MatrixXd K(n + m, n + m);
  K.setZero();
  K.topLeftCorner(n, n) = Q;
  if (m > 0) {
    K.topRightCorner(n, m) = A_act.transpose();
    K.bottomLeftCorner(m, n) = A_act;
  }
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = -g;
  if (a_rhs != nullptr) {
    rhs.tail(m) = *a_rhs;
  } else {
    rhs.tail(m).setZero();
  }
  Eigen::VectorXd sol = Eigen::PartialPivLU<Eigen::MatrixXd>(K).solve(rhs);
  const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-8 * scale) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) return false;
    sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;
  }
  p_out = sol.head(n);
  lambda_out = sol.tail(m);
  return true;
}

struct CoreResult {
  Eigen::VectorXd x;
  Eigen::VectorXd mult_ineq;
  Eigen::VectorXd mult_eq;
  std::vector<int> active;
  QpStatus status = QpStatus::IterationLimit;
  int iterations = 0;
};

/// Primal active-set iteration from a feasible point. Deterministic: the
/// blocking constraint with the smallest step wins (ties by steepest approach,
/// then index), removals take the most negative multiplier (ties by index).
inline CoreResult active_set_core(const QpProblem& p, const Eigen::VectorXd& x0,
                                  const std::vector<int>& initial_active, int max_iter) {
  const int n = p.num_vars();
  const int m = p.num_ineq();
  const int neq = p.num_eq();

  CoreResult res;
  res.x = x0;
  WorkingSet ws;

  // Seed the working set with independent near-active rows.
  Eigen::MatrixXd basis(neq + std::min(n, m), n);
  int basis_rows = 0;
  for (int e = 0; e < neq; ++e) basis.row(basis_rows++) = p.A_eq.row(e);
  auto independent = [&](const Eigen::RowVectorXd& row) {
    if (basis_rows == 0) return row.norm() > 1e-12;
    const auto block = basis.topRows(basis_rows);
    const Eigen::VectorXd coeff =
        block.transpose().colPivHouseholderQr().solve(row.transpose());
    return (row.transpose() - block.transpose() * coeff).norm() > 1e-8 * std::max(1.0, row.norm());
  };
  for (int i : initial_active) {
    if (i < 0 || i >= m || ws.contains(i)) continue;
    if (std::abs(p.A_ineq.row(i).dot(res.x) - p.b_ineq(i)) > 1e-7) continue;
    if (basis_rows >= n) break;
    if (!independent(p.A_ineq.row(i))) continue;
    basis.row(basis_rows++) = p.A_ineq.row(i);
    ws.rows.push_back(i);
  }

  Eigen::VectorXd step, lambda;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    const Eigen::VectorXd g = p.Q * res.x + p.c;
    Eigen::MatrixXd A_act(neq + static_cast<int>(ws.rows.size()), n);
    for (int e = 0; e < neq; ++e) A_act.row(e) = p.A_eq.row(e);
    for (std::size_t j = 0; j < ws.rows.size(); ++j)
      A_act.row(neq + static_cast<int>(j)) = p.A_ineq.row(ws.rows[j]);

    if (!solve_kkt(p.Q, g, A_act, step, lambda)) {
      // Singular working set; drop the newest inequality row and retry.
      if (ws.rows.empty()) return res;
      ws.rows.pop_back();
      continue;
    }

    if (step.lpNorm<Eigen::Infinity>() <= 1e-10) {
      int worst = -1;
      double worst_mult = -kQpTol * 0.1;
      for (std::size_t j = 0; j < ws.rows.size(); ++j) {
        const double mu = lambda(neq + static_cast<int>(j));
        if (mu < worst_mult ||
            (worst >= 0 && mu == worst_mult && ws.rows[j] < ws.rows[static_cast<std::size_t>(worst)])) {
          worst_mult = mu;
          worst = static_cast<int>(j);
        }
      }
      if (worst < 0) {
        // Polish: resolve the KKT system in absolute form so the iterate sits
        // exactly on the active constraints before reporting.
        Eigen::VectorXd b_act(A_act.rows());
        for (int e = 0; e < neq; ++e) b_act(e) = p.b_eq(e);
        for (std::size_t j = 0; j < ws.rows.size(); ++j)
          b_act(neq + static_cast<int>(j)) = p.b_ineq(ws.rows[j]);
        Eigen::VectorXd x_pol, lambda_pol;
        if (solve_kkt(p.Q, p.c, A_act, x_pol, lambda_pol, &b_act)) {
          bool ok = true;
          for (int i = 0; i < m && ok; ++i) {
            if (ws.contains(i)) continue;
            ok = p.A_ineq.row(i).dot(x_pol) <= p.b_ineq(i) + 1e-9;
          }
          if (ok) {
            res.x = x_pol;
            lambda = lambda_pol;
          }
        }
        res.mult_ineq = Eigen::VectorXd::Zero(m);
        for (std::size_t j = 0; j < ws.rows.size(); ++j)
          res.mult_ineq(ws.rows[j]) = std::max(0.0, lambda(neq + static_cast<int>(j)));
        res.mult_eq = lambda.head(neq);
        res.active = ws.rows;
        std::sort(res.active.begin(), res.active.end());
        res.status = QpStatus::Optimal;
        ++res.iterations;
        return res;
      }
      ws.rows.erase(ws.rows.begin() + worst);
      continue;
    }

    // Ratio test over inactive constraints.
    double alpha = 1.0;
    int blocking = -1;
    double blocking_rate = 0.0;
    for (int i = 0; i < m; ++i) {
      if (ws.contains(i)) continue;
      const double rate = p.A_ineq.row(i).dot(step);
      if (rate <= 1e-12) continue;
      double ratio = (p.b_ineq(i) - p.A_ineq.row(i).dot(res.x)) / rate;
      if (ratio < 0.0) ratio = 0.0;
      const bool tie = std::abs(ratio - alpha) <= 1e-12;
      if ((ratio < alpha - 1e-12) || (tie && blocking >= 0 && rate > blocking_rate) ||
          (tie && blocking >= 0 && rate == blocking_rate && i < blocking)) {
        alpha = std::min(ratio, alpha);
        blocking = i;
        blocking_rate = rate;
      }
    }
    res.x += alpha * step;
    if (blocking >= 0 && alpha < 1.0 - 1e-15) ws.rows.push_back(blocking);
  }
  res.status = QpStatus::IterationLimit;
  res.mult_ineq = Eigen::VectorXd::Zero(m);
  res.mult_eq = Eigen::VectorXd::Zero(neq);
  res.active = ws.rows;
  std::sort(res.active.begin(), res.active.end());
  return res;
}

inline bool point_feasible(const QpProblem& p, const Eigen::VectorXd& x, double tol) {
  if (x.size() != p.num_vars()) return false;
  if (p.num_ineq() > 0 && (p.A_ineq * x - p.b_ineq).maxCoeff() > tol) return false;
  if (p.num_eq() > 0 && (p.A_eq * x - p.b_eq).lpNorm<Eigen::Infinity>() > tol) return false;
  return true;
}

inline Eigen::VectorXd equality_least_norm(const QpProblem& p) {
  if (p.num_eq() == 0) return Eigen::VectorXd::Zero(p.num_vars());
  return p.A_eq.completeOrthogonalDecomposition().solve(p.b_eq);
}

}  // namespace detail

/// Primal active-set solve. A feasible start comes from the warm start when
/// valid, from the least-norm equality solution when it already satisfies the
/// inequalities, and otherwise from a phase-1 slack QP.
inline QpSolution solve(const QpProblem& problem, const QpWarmStart* warm = nullptr) {
  detail::validate_problem(problem);
  QpProblem p = problem;
  detail::regularize(p.Q);

  const int n = p.num_vars();
  const int m = p.num_ineq();

  Eigen::VectorXd x0;
  std::vector<int> w0;
  int phase1_iterations = 0;
  if (warm != nullptr && detail::point_feasible(p, warm->point, 1e-8)) {
    x0 = warm->point;
    w0 = warm->active_set;
  } else {
    x0 = detail::equality_least_norm(p);
    if (!detail::point_feasible(p, x0, 1e-9)) {
      // Phase 1: minimize slack magnitudes with a feasible-by-construction
      // start in the lifted (x, s) space.
      QpProblem ph;
      ph.Q = Eigen::MatrixXd::Identity(n + m, n + m);
      ph.Q.topLeftCorner(n, n) *= 1e-8;
      ph.c = Eigen::VectorXd::Zero(n + m);
      ph.A_ineq = Eigen::MatrixXd::Zero(2 * m, n + m);
      ph.b_ineq = Eigen::VectorXd::Zero(2 * m);
      ph.A_ineq.topLeftCorner(m, n) = p.A_ineq;
      ph.A_ineq.topRightCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
      ph.b_ineq.head(m) = p.b_ineq;
      ph.A_ineq.bottomRightCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
      ph.A_eq = Eigen::MatrixXd::Zero(p.num_eq(), n + m);
      if (p.num_eq() > 0) ph.A_eq.leftCols(n) = p.A_eq;
      ph.b_eq = p.b_eq;

      Eigen::VectorXd z0(n + m);
      z0.head(n) = x0;
      std::vector<int> ph_active;
      for (int i = 0; i < m; ++i) {
        const double violation = p.A_ineq.row(i).dot(x0) - p.b_ineq(i);
        z0(n + i) = std::max(0.0, violation);
        ph_active.push_back(violation > 0.0 ? i : m + i);
      }
      const auto ph_res = detail::active_set_core(ph, z0, ph_active, kQpMaxIterations);
      phase1_iterations = ph_res.iterations;
      const double worst_slack = m > 0 ? ph_res.x.tail(m).maxCoeff() : 0.0;
      if (ph_res.status != QpStatus::Optimal || worst_slack > 1e-7) {
        QpSolution sol;
        sol.status = QpStatus::Infeasible;
        sol.theta = ph_res.x.head(n);
        sol.iterations = phase1_iterations;
        sol.mult_ineq = Eigen::VectorXd::Zero(m);
        sol.mult_eq = Eigen::VectorXd::Zero(p.num_eq());
        sol.objective = 0.5 * sol.theta.dot(p.Q * sol.theta) + p.c.dot(sol.theta);
        sol.kkt_residual = kkt_residual(p, sol.theta, sol.mult_ineq, sol.mult_eq);
        return sol;
      }
      x0 = ph_res.x.head(n);
    }
  }

  const auto core = detail::active_set_core(p, x0, w0, kQpMaxIterations);

  QpSolution sol;
  sol.theta = core.x;
  sol.status = core.status;
  sol.iterations = core.iterations + phase1_iterations;
  sol.active_set = core.active;
  sol.mult_ineq = core.mult_ineq.size() == m ? core.mult_ineq : Eigen::VectorXd::Zero(m);
  sol.mult_eq = core.mult_eq.size() == p.num_eq() ? core.mult_eq
                                                  : Eigen::VectorXd::Zero(p.num_eq());
  sol.objective = 0.5 * sol.theta.dot(p.Q * sol.theta) + p.c.dot(sol.theta);
  sol.kkt_residual = kkt_residual(p, sol.theta, sol.mult_ineq, sol.mult_eq);
  return sol;
}

/// Plain-text dump for failure reproduction: dimensions, then row-major
/// matrices.
inline void write_qp_debug(std::ostream& os, const QpProblem& p) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "qp " << p.num_vars() << ' ' << p.num_ineq() << ' ' << p.num_eq() << '\n';
  auto dump_matrix = [&](const Eigen::MatrixXd& M) {
    for (int i = 0; i < M.rows(); ++i) {
      for (int j = 0; j < M.cols(); ++j) os << (j ? " " : "") << fmt(M(i, j));
      os << '\n';
    }
  };
  auto dump_vector = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) os << (i ? " " : "") << fmt(v(i));
    os << '\n';
  };
  dump_matrix(p.Q);
  dump_vector(p.c);
  dump_matrix(p.A_ineq);
  dump_vector(p.b_ineq);
  dump_matrix(p.A_eq);
  dump_vector(p.b_eq);
}

inline QpProblem read_qp_debug(std::istream& is) {
  std::string tag;
  int n = 0, m = 0, q = 0;
  if (!(is >> tag >> n >> m >> q) || tag != "qp")
    throw Error(ErrorCode::IoError, "malformed QP debug header");
  QpProblem p;
  auto read_matrix = [&](int rows, int cols) {
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if (!(is >> M(i, j))) throw Error(ErrorCode::IoError, "truncated QP debug matrix");
    return M;
  };
  auto read_vector = [&](int size) {
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i)
      if (!(is >> v(i))) throw Error(ErrorCode::IoError, "truncated QP debug vector");
    return v;
  };
  p.Q = read_matrix(n, n);
  p.c = read_vector(n);
  p.A_ineq = read_matrix(m, n);
  p.b_ineq = read_vector(m);
  p.A_eq = read_matrix(q, n);
  p.b_eq = read_vector(q);
  return p;
}

}  // namespace stplan
