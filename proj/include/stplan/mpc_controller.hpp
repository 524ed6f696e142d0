#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "stplan/common.hpp"
#include "stplan/frenet_path.hpp"
#include "stplan/qp_solver.hpp"
#include "stplan/st_graph.hpp"
#include "stplan/vehicle_model.hpp"

namespace stplan {

struct MpcConfig {
  int N = 30;
  double dt = 0.1;
  Eigen::Matrix4d Q_state = (Eigen::Vector4d(10.0, 10.0, 1.0, 1.0)).asDiagonal();
  Eigen::Matrix2d R_input = (Eigen::Vector2d(1.0, 10.0)).asDiagonal();
  Eigen::Matrix4d Q_f = 5.0 * (Eigen::Vector4d(10.0, 10.0, 1.0, 1.0)).asDiagonal().toDenseMatrix();
  VehicleParams vehicle;
  bool use_sparse_formulation = false;  // Eq-constrained stacking, kept for cross-checks
  double corridor_slack_weight = 1e4;
};

/// Time-stamped reference states over the horizon (N+1 entries at step dt).
struct MpcReference {
  std::vector<VehicleState> states;
};

/// Optional corridor coupling: bounds live in path arc length, so predicted
/// positions are projected through the reference path.
struct MpcCorridorContext {
  const SafeCorridor* corridor = nullptr;
  const ReferencePath* path = nullptr;
  double t0 = 0.0;  // corridor-relative time of the first MPC step
};

enum class MpcRowFamily { AccelBox, SteerBox, Speed, Jerk, Corridor, SlackSign };

inline const char* mpc_row_family_name(MpcRowFamily f) {
  switch (f) {
    case MpcRowFamily::AccelBox: return "acceleration";
    case MpcRowFamily::SteerBox: return "steering";
    case MpcRowFamily::Speed: return "speed";
    case MpcRowFamily::Jerk: return "jerk";
    case MpcRowFamily::Corridor: return "corridor";
    case MpcRowFamily::SlackSign: return "slack_sign";
  }
  return "?";
}

/// Corridor coupling for one horizon step: the predicted arc length is
/// s_pred = jac * position_k + offset, confined to `bounds` (softened).
struct MpcCorridorRow {
  int k = 0;
  Eigen::RowVector2d jac;
  double offset = 0.0;
  Interval bounds;
};

struct AssembledQp {
  QpProblem problem;
  std::vector<MpcRowFamily> row_family;
  std::vector<Linearization> lin;          // per-step models about the nominal
  std::vector<Eigen::Vector4d> nominal_x;  // unwrapped nominal states
  std::vector<Eigen::Vector2d> nominal_u;
  int num_inputs = 0;  // 2N
  int num_slack = 0;
  std::vector<MpcCorridorRow> corridor_rows;
};

struct MpcSolution {
  std::vector<ControlInput> inputs;
  std::vector<VehicleState> predicted;  // affine-model replay, heading unwrapped
  QpSolution qp;
  double max_slack = 0.0;
};

namespace detail {

inline double unwrap_near(double prev, double theta) {
  return prev + normalize_angle(theta - prev);
}

inline Eigen::Vector4d to_vec(const VehicleState& s) {
  return Eigen::Vector4d(s.x, s.y, s.theta, s.v);
}

}  // namespace detail

/// Builds the condensed QP over [inputs; corridor slacks]: the dynamics are
/// eliminated by forward substitution of the per-step affine models, the cost
/// is the deviation form of the tracking objective, and the inequalities
/// cover input boxes, speed bounds, the acceleration-rate (jerk) bound, and
/// softened corridor bounds on the projected arc length.
inline AssembledQp assemble_qp(const VehicleState& s0, const MpcReference& ref,
                               const MpcConfig& cfg, const MpcCorridorContext& ctx,
                               const std::vector<VehicleState>& nominal_states,
                               const std::vector<ControlInput>& nominal_inputs) {
  const int N = cfg.N;
  if (static_cast<int>(ref.states.size()) != N + 1)
    throw Error(ErrorCode::HorizonMismatch, "reference must provide N+1 states");
  if (static_cast<int>(nominal_states.size()) != N + 1 ||
      static_cast<int>(nominal_inputs.size()) != N)
    throw Error(ErrorCode::HorizonMismatch, "nominal trajectory must match the horizon");

  AssembledQp out;
  out.num_inputs = 2 * N;

  // Unwrap headings so the quadratic penalty never spans a 2*pi jump.
  out.nominal_x.resize(static_cast<std::size_t>(N) + 1);
  out.nominal_u.resize(static_cast<std::size_t>(N));
  std::vector<Eigen::Vector4d> ref_x(static_cast<std::size_t>(N) + 1);
  double prev_theta = s0.theta;
  for (int k = 0; k <= N; ++k) {
    Eigen::Vector4d x = detail::to_vec(nominal_states[static_cast<std::size_t>(k)]);
    x(2) = detail::unwrap_near(prev_theta, x(2));
    prev_theta = x(2);
    out.nominal_x[static_cast<std::size_t>(k)] = x;
  }
  prev_theta = s0.theta;
  for (int k = 0; k <= N; ++k) {
    Eigen::Vector4d x = detail::to_vec(ref.states[static_cast<std::size_t>(k)]);
    x(2) = detail::unwrap_near(prev_theta, x(2));
    prev_theta = x(2);
    ref_x[static_cast<std::size_t>(k)] = x;
  }
  for (int k = 0; k < N; ++k)
    out.nominal_u[static_cast<std::size_t>(k)] = Eigen::Vector2d(
        nominal_inputs[static_cast<std::size_t>(k)].a, nominal_inputs[static_cast<std::size_t>(k)].delta);

  out.lin.reserve(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    VehicleState xs;
    const auto& xv = out.nominal_x[static_cast<std::size_t>(k)];
    xs.x = xv(0);
    xs.y = xv(1);
    xs.theta = xv(2);
    xs.v = xv(3);
    ControlInput us{out.nominal_u[static_cast<std::size_t>(k)](0),
                    out.nominal_u[static_cast<std::size_t>(k)](1)};
    out.lin.push_back(linearize(xs, us, cfg.vehicle));
  }

  // Forward substitution: x_k = F_k + G_k U.
  std::vector<Eigen::Vector4d> F(static_cast<std::size_t>(N) + 1);
  std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(N) + 1);
  Eigen::Vector4d x0 = detail::to_vec(s0);
  x0(2) = detail::unwrap_near(s0.theta, x0(2));
  F[0] = x0;
  G[0] = Eigen::MatrixXd::Zero(4, out.num_inputs);
  for (int k = 0; k < N; ++k) {
    const auto& lin = out.lin[static_cast<std::size_t>(k)];
    F[static_cast<std::size_t>(k) + 1] = lin.A * F[static_cast<std::size_t>(k)] + lin.r;
    G[static_cast<std::size_t>(k) + 1] = lin.A * G[static_cast<std::size_t>(k)];
    G[static_cast<std::size_t>(k) + 1].block(0, 2 * k, 4, 2) += lin.B;
  }

  // Corridor rows: only steps whose reachable arc-length window can touch the
  // bounds carry rows and slacks.
  if (ctx.corridor != nullptr && ctx.path != nullptr) {
    const double s_now = ctx.path->cartesian_to_frenet(s0.x, s0.y).l;
    for (int k = 1; k <= N; ++k) {
      const double t = ctx.t0 + cfg.dt * k;
      if (t > ctx.corridor->horizon() + 1e-9)
        throw Error(ErrorCode::CorridorGap, "corridor does not cover the MPC horizon");
      const Interval bounds = ctx.corridor->bounds_at(t);
      const Interval reach{s_now + cfg.vehicle.v_min * cfg.dt * k - 1.0,
                           s_now + cfg.vehicle.v_max * cfg.dt * k + 1.0};
      constexpr double kMargin = 2.0;
      if (reach.lo > bounds.lo + kMargin && reach.hi < bounds.hi - kMargin) continue;

      FrenetPoint nominal_fp;
      try {
        nominal_fp = ctx.path->cartesian_to_frenet(out.nominal_x[static_cast<std::size_t>(k)](0),
                                                   out.nominal_x[static_cast<std::size_t>(k)](1));
      } catch (const Error&) {
        continue;  // nominal off the projectable band; leave the step unconstrained
      }
      const double kappa = ctx.path->curvature_at(nominal_fp.l);
      const auto [tx, ty] = ctx.path->tangent_at(nominal_fp.l);
      const double denom = 1.0 - kappa * nominal_fp.d;
      if (std::abs(denom) < 1e-6) continue;

      MpcCorridorRow row;
      row.k = k;
      row.jac = Eigen::RowVector2d(tx / denom, ty / denom);
      row.offset = nominal_fp.l - row.jac.dot(out.nominal_x[static_cast<std::size_t>(k)].head(2));
      row.bounds = bounds;
      out.corridor_rows.push_back(row);
    }
  }
  out.num_slack = 2 * static_cast<int>(out.corridor_rows.size());

  const int nv = out.num_inputs + out.num_slack;
  QpProblem& qp = out.problem;
  qp.Q = Eigen::MatrixXd::Zero(nv, nv);
  qp.c = Eigen::VectorXd::Zero(nv);

  for (int k = 1; k <= N; ++k) {
    const Eigen::Matrix4d& W = (k == N) ? cfg.Q_f : cfg.Q_state;
    const auto& Gk = G[static_cast<std::size_t>(k)];
    qp.Q.topLeftCorner(out.num_inputs, out.num_inputs) += 2.0 * Gk.transpose() * W * Gk;
    qp.c.head(out.num_inputs) +=
        2.0 * Gk.transpose() * W * (F[static_cast<std::size_t>(k)] - ref_x[static_cast<std::size_t>(k)]);
  }
  for (int k = 0; k < N; ++k)
    qp.Q.block(2 * k, 2 * k, 2, 2) += 2.0 * cfg.R_input;
  // Linear (exact) slack penalty: slack stays at zero whenever the corridor
  // is feasible; the small quadratic term keeps the Hessian well conditioned.
  for (int i = 0; i < out.num_slack; ++i) {
    qp.Q(out.num_inputs + i, out.num_inputs + i) = 2.0;
    qp.c(out.num_inputs + i) = cfg.corridor_slack_weight;
  }
  qp.Q = (0.5 * (qp.Q + qp.Q.transpose())).eval();  // kills accumulation round-off

  const int n_rows =
      4 * N + 2 * N + 2 * (N - 1) + 2 * static_cast<int>(out.corridor_rows.size()) + out.num_slack;
  qp.A_ineq = Eigen::MatrixXd::Zero(n_rows, nv);
  qp.b_ineq = Eigen::VectorXd::Zero(n_rows);
  out.row_family.assign(static_cast<std::size_t>(n_rows), MpcRowFamily::AccelBox);
  int r = 0;
  auto push_family = [&](MpcRowFamily f) { out.row_family[static_cast<std::size_t>(r)] = f; };

  for (int k = 0; k < N; ++k) {
    push_family(MpcRowFamily::AccelBox);
    qp.A_ineq(r, 2 * k) = 1.0;
    qp.b_ineq(r++) = cfg.vehicle.a_max;
    push_family(MpcRowFamily::AccelBox);
    qp.A_ineq(r, 2 * k) = -1.0;
    qp.b_ineq(r++) = cfg.vehicle.a_max;
    push_family(MpcRowFamily::SteerBox);
    qp.A_ineq(r, 2 * k + 1) = 1.0;
    qp.b_ineq(r++) = cfg.vehicle.delta_max;
    push_family(MpcRowFamily::SteerBox);
    qp.A_ineq(r, 2 * k + 1) = -1.0;
    qp.b_ineq(r++) = cfg.vehicle.delta_max;
  }
  for (int k = 1; k <= N; ++k) {
    const Eigen::RowVectorXd gv = G[static_cast<std::size_t>(k)].row(3);
    push_family(MpcRowFamily::Speed);
    qp.A_ineq.row(r).head(out.num_inputs) = gv;
    qp.b_ineq(r++) = cfg.vehicle.v_max - F[static_cast<std::size_t>(k)](3);
    push_family(MpcRowFamily::Speed);
    qp.A_ineq.row(r).head(out.num_inputs) = -gv;
    qp.b_ineq(r++) = F[static_cast<std::size_t>(k)](3) - cfg.vehicle.v_min;
  }
  for (int k = 0; k + 1 < N; ++k) {
    push_family(MpcRowFamily::Jerk);
    qp.A_ineq(r, 2 * (k + 1)) = 1.0;
    qp.A_ineq(r, 2 * k) = -1.0;
    qp.b_ineq(r++) = cfg.vehicle.j_max * cfg.dt;
    push_family(MpcRowFamily::Jerk);
    qp.A_ineq(r, 2 * (k + 1)) = -1.0;
    qp.A_ineq(r, 2 * k) = 1.0;
    qp.b_ineq(r++) = cfg.vehicle.j_max * cfg.dt;
  }
  for (std::size_t i = 0; i < out.corridor_rows.size(); ++i) {
    const auto& row = out.corridor_rows[i];
    const Eigen::RowVectorXd coeff =
        row.jac * G[static_cast<std::size_t>(row.k)].topRows(2);
    const double s_const =
        row.offset + row.jac.dot(F[static_cast<std::size_t>(row.k)].head(2));
    const int slack_lo = out.num_inputs + 2 * static_cast<int>(i);
    const int slack_hi = slack_lo + 1;
    push_family(MpcRowFamily::Corridor);  // s_k <= hi + slack_hi
    qp.A_ineq.row(r).head(out.num_inputs) = coeff;
    qp.A_ineq(r, slack_hi) = -1.0;
    qp.b_ineq(r++) = row.bounds.hi - s_const;
    push_family(MpcRowFamily::Corridor);  // s_k >= lo - slack_lo
    qp.A_ineq.row(r).head(out.num_inputs) = -coeff;
    qp.A_ineq(r, slack_lo) = -1.0;
    qp.b_ineq(r++) = s_const - row.bounds.lo;
  }
  for (int i = 0; i < out.num_slack; ++i) {
    push_family(MpcRowFamily::SlackSign);
    qp.A_ineq(r, out.num_inputs + i) = -1.0;
    qp.b_ineq(r++) = 0.0;
  }

  qp.A_eq = Eigen::MatrixXd::Zero(0, nv);
  qp.b_eq = Eigen::VectorXd::Zero(0);
  return out;
}

/// Equality-constrained stacking over [states; inputs; slacks]; used to
/// cross-check the condensed path. Both must produce the same input sequence.
inline QpProblem assemble_qp_sparse(const VehicleState& s0, const MpcReference& ref,
                                    const MpcConfig& cfg, const AssembledQp& condensed) {
  const int N = cfg.N;
  const int nx = 4 * N;          // x_1 .. x_N
  const int nu = condensed.num_inputs;
  const int ns = condensed.num_slack;
  const int nv = nx + nu + ns;

  std::vector<Eigen::Vector4d> ref_x(static_cast<std::size_t>(N) + 1);
  double prev_theta = s0.theta;
  for (int k = 0; k <= N; ++k) {
    Eigen::Vector4d x = detail::to_vec(ref.states[static_cast<std::size_t>(k)]);
    x(2) = detail::unwrap_near(prev_theta, x(2));
    prev_theta = x(2);
    ref_x[static_cast<std::size_t>(k)] = x;
  }

  QpProblem qp;
  qp.Q = Eigen::MatrixXd::Zero(nv, nv);
  qp.c = Eigen::VectorXd::Zero(nv);
  for (int k = 1; k <= N; ++k) {
    const Eigen::Matrix4d& W = (k == N) ? cfg.Q_f : cfg.Q_state;
    const int off = 4 * (k - 1);
    qp.Q.block(off, off, 4, 4) += 2.0 * W;
    qp.c.segment(off, 4) += -2.0 * W * ref_x[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < N; ++k) qp.Q.block(nx + 2 * k, nx + 2 * k, 2, 2) += 2.0 * cfg.R_input;
  for (int i = 0; i < ns; ++i) {
    qp.Q(nx + nu + i, nx + nu + i) = 2.0;
    qp.c(nx + nu + i) = cfg.corridor_slack_weight;
  }

  // Dynamics equalities.
  qp.A_eq = Eigen::MatrixXd::Zero(nx, nv);
  qp.b_eq = Eigen::VectorXd::Zero(nx);
  Eigen::Vector4d x0 = detail::to_vec(s0);
  for (int k = 0; k < N; ++k) {
    const auto& lin = condensed.lin[static_cast<std::size_t>(k)];
    const int row = 4 * k;
    qp.A_eq.block(row, 4 * k, 4, 4) = Eigen::Matrix4d::Identity();
    if (k > 0) qp.A_eq.block(row, 4 * (k - 1), 4, 4) = -lin.A;
    qp.A_eq.block(row, nx + 2 * k, 4, 2) = -lin.B;
    qp.b_eq.segment(row, 4) = lin.r + (k == 0 ? (lin.A * x0).eval() : Eigen::Vector4d::Zero().eval());
  }

  // Inequalities on the stacked variables, same ordering as the condensed
  // path: input boxes, speed bounds per state, jerk rate, corridor, slacks.
  const QpProblem& cqp = condensed.problem;
  const int m = cqp.num_ineq();
  qp.A_ineq = Eigen::MatrixXd::Zero(m, nv);
  qp.b_ineq = cqp.b_ineq;
  int speed_seen = 0;
  int corridor_seen = 0;
  for (int rr = 0; rr < m; ++rr) {
    switch (condensed.row_family[static_cast<std::size_t>(rr)]) {
      case MpcRowFamily::AccelBox:
      case MpcRowFamily::SteerBox:
      case MpcRowFamily::Jerk:
        qp.A_ineq.row(rr).segment(nx, nu) = cqp.A_ineq.row(rr).head(nu);
        break;
      case MpcRowFamily::SlackSign:
        qp.A_ineq.row(rr).segment(nx + nu, ns) = cqp.A_ineq.row(rr).tail(ns);
        break;
      case MpcRowFamily::Speed: {
        const int k = speed_seen / 2 + 1;  // pairs (upper, lower) for k = 1..N
        const bool upper = (speed_seen % 2) == 0;
        ++speed_seen;
        qp.A_ineq(rr, 4 * (k - 1) + 3) = upper ? 1.0 : -1.0;
        qp.b_ineq(rr) = upper ? cfg.vehicle.v_max : -cfg.vehicle.v_min;
        break;
      }
      case MpcRowFamily::Corridor: {
        const auto& row = condensed.corridor_rows[static_cast<std::size_t>(corridor_seen / 2)];
        const bool upper = (corridor_seen % 2) == 0;
        const int slack_col = nx + nu + corridor_seen / 2 * 2 + (upper ? 1 : 0);
        ++corridor_seen;
        const double sign = upper ? 1.0 : -1.0;
        qp.A_ineq(rr, 4 * (row.k - 1)) = sign * row.jac(0);
        qp.A_ineq(rr, 4 * (row.k - 1) + 1) = sign * row.jac(1);
        qp.A_ineq(rr, slack_col) = -1.0;
        qp.b_ineq(rr) = upper ? row.bounds.hi - row.offset : row.offset - row.bounds.lo;
        break;
      }
    }
  }
  return qp;
}

/// One receding-horizon step: assembles the condensed QP about the shifted
/// previous solution (or the reference on the first call) and solves it.
/// Throws QpInfeasible when the solver cannot certify optimality.
inline MpcSolution control_step(const VehicleState& s0, const MpcReference& ref,
                                const MpcConfig& cfg, const MpcCorridorContext& ctx,
                                const MpcSolution* prev = nullptr) {
  const int N = cfg.N;
  std::vector<VehicleState> nominal_states;
  std::vector<ControlInput> nominal_inputs;
  if (prev != nullptr && static_cast<int>(prev->predicted.size()) == N + 1) {
    nominal_states.assign(prev->predicted.begin() + 1, prev->predicted.end());
    nominal_states.push_back(prev->predicted.back());
    nominal_inputs.assign(prev->inputs.begin() + 1, prev->inputs.end());
    nominal_inputs.push_back(prev->inputs.back());
  } else {
    nominal_states = ref.states;
    nominal_inputs.assign(static_cast<std::size_t>(N), ControlInput{});
  }

  AssembledQp asm_qp = assemble_qp(s0, ref, cfg, ctx, nominal_states, nominal_inputs);
  const QpProblem& qp = asm_qp.problem;

  // Feasible start: zero inputs satisfy every hard row (given v0 within
  // bounds); slacks absorb any corridor violation.
  QpWarmStart ws;
  ws.point = Eigen::VectorXd::Zero(qp.num_vars());
  if (prev != nullptr && static_cast<int>(prev->inputs.size()) == N) {
    for (int k = 0; k < N; ++k) {
      const auto& u = prev->inputs[static_cast<std::size_t>(std::min(k + 1, N - 1))];
      ws.point(2 * k) = std::clamp(u.a, -cfg.vehicle.a_max, cfg.vehicle.a_max);
      ws.point(2 * k + 1) = std::clamp(u.delta, -cfg.vehicle.delta_max, cfg.vehicle.delta_max);
    }
    if (static_cast<int>(prev->qp.mult_ineq.size()) == qp.num_ineq())
      ws.active_set = prev->qp.active_set;
  }
  // Lift slacks to cover corridor residuals at the warm point.
  for (int r = 0; r < qp.num_ineq(); ++r) {
    if (asm_qp.row_family[static_cast<std::size_t>(r)] != MpcRowFamily::Corridor) continue;
    const double resid = qp.A_ineq.row(r).dot(ws.point) - qp.b_ineq(r);
    if (resid <= 0.0) continue;
    for (int j = asm_qp.num_inputs; j < qp.num_vars(); ++j) {
      if (qp.A_ineq(r, j) == -1.0) {
        ws.point(j) += resid;
        break;
      }
    }
  }
  if (!detail::point_feasible(qp, ws.point, 1e-9)) {
    ws.point = Eigen::VectorXd::Zero(qp.num_vars());
    for (int r = 0; r < qp.num_ineq(); ++r) {
      if (asm_qp.row_family[static_cast<std::size_t>(r)] != MpcRowFamily::Corridor) continue;
      const double resid = -qp.b_ineq(r);
      if (resid <= 0.0) continue;
      for (int j = asm_qp.num_inputs; j < qp.num_vars(); ++j)
        if (qp.A_ineq(r, j) == -1.0) {
          ws.point(j) += resid;
          break;
        }
    }
    ws.active_set.clear();
  }

  QpSolution sol = detail::point_feasible(qp, ws.point, 1e-9) ? solve(qp, &ws) : solve(qp);
  if (sol.status != QpStatus::Optimal) {
    // Name the worst-violated family for the caller's fallback logic.
    MpcRowFamily worst = MpcRowFamily::AccelBox;
    double worst_violation = 0.0;
    for (int r = 0; r < qp.num_ineq(); ++r) {
      const double v = qp.A_ineq.row(r).dot(sol.theta) - qp.b_ineq(r);
      if (v > worst_violation) {
        worst_violation = v;
        worst = asm_qp.row_family[static_cast<std::size_t>(r)];
      }
    }
    throw Error(ErrorCode::QpInfeasible,
                std::string("QP ") + qp_status_name(sol.status) + ", worst family " +
                    mpc_row_family_name(worst));
  }

  MpcSolution out;
  out.qp = sol;
  out.inputs.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k)
    out.inputs[static_cast<std::size_t>(k)] = {sol.theta(2 * k), sol.theta(2 * k + 1)};
  for (int i = asm_qp.num_inputs; i < qp.num_vars(); ++i)
    out.max_slack = std::max(out.max_slack, sol.theta(i));

  // Replay through the affine models; this is the prediction the QP saw.
  out.predicted.resize(static_cast<std::size_t>(N) + 1);
  Eigen::Vector4d x = detail::to_vec(s0);
  out.predicted[0] = s0;
  for (int k = 0; k < N; ++k) {
    const auto& lin = asm_qp.lin[static_cast<std::size_t>(k)];
    const Eigen::Vector2d u(sol.theta(2 * k), sol.theta(2 * k + 1));
    x = lin.A * x + lin.B * u + lin.r;
    out.predicted[static_cast<std::size_t>(k) + 1] = {x(0), x(1), x(2), x(3)};
  }
  return out;
}

}  // namespace stplan
