#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "stplan/sampler.hpp"

using namespace stplan;

namespace {

TEST(SolveQuintic, ConstantProfile) {
  const auto q = solve_quintic({3.0, 0.0, 0.0, 3.0, 0.0, 0.0}, 0.0, 2.0);
  EXPECT_NEAR(q.b[0], 3.0, 1e-12);
  for (int k = 1; k < 6; ++k) EXPECT_NEAR(q.b[static_cast<std::size_t>(k)], 0.0, 1e-12);
}

TEST(SolveQuintic, UnitStepMatchesIndependentSolver) {
  // Canonical rest-to-rest unit step on [0, 1]; the oracle is a hand-rolled
  // Gauss-Jordan solve of the boundary system.
  const auto q = solve_quintic({0.0, 0.0, 0.0, 1.0, 0.0, 0.0}, 0.0, 1.0);
  const std::array<double, 6> expected{0.0, 0.0, 0.0, 10.0, -15.0, 6.0};
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(q.b[static_cast<std::size_t>(k)], expected[static_cast<std::size_t>(k)], 1e-9);

  std::array<std::array<double, 6>, 6> M{};
  const double T = 1.0;
  M[0] = {1, 0, 0, 0, 0, 0};
  M[1] = {0, 1, 0, 0, 0, 0};
  M[2] = {0, 0, 2, 0, 0, 0};
  for (int k = 0; k < 6; ++k) {
    M[3][static_cast<std::size_t>(k)] = std::pow(T, k);
    M[4][static_cast<std::size_t>(k)] = k * std::pow(T, k - 1);
    M[5][static_cast<std::size_t>(k)] = k * (k - 1) * std::pow(T, k - 2);
  }
  const auto oracle = oracles::gauss_jordan<6>(M, {0.0, 0.0, 0.0, 1.0, 0.0, 0.0});
  for (int k = 0; k < 6; ++k)
    EXPECT_NEAR(q.b[static_cast<std::size_t>(k)], oracle[static_cast<std::size_t>(k)], 1e-9);
}

TEST(SolveQuintic, ShortHorizonThrowsIllConditioned) {
  try {
    solve_quintic({0, 0, 0, 1, 0, 0}, 0.0, 0.01);
    FAIL() << "expected IllConditioned";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IllConditioned);
  }
}

TEST(SolveQuintic, NonzeroStartTimeUsesLocalClock) {
  const auto q = solve_quintic({2.0, 1.0, 0.5, 8.0, 0.0, 0.0}, 10.0, 14.0);
  EXPECT_NEAR(eval_quintic(q, 10.0, 0), 2.0, 1e-9);
  EXPECT_NEAR(eval_quintic(q, 10.0, 1), 1.0, 1e-9);
  EXPECT_NEAR(eval_quintic(q, 10.0, 2), 0.5, 1e-9);
  EXPECT_NEAR(eval_quintic(q, 14.0, 0), 8.0, 1e-9);
  EXPECT_NEAR(eval_quintic(q, 14.0, 1), 0.0, 1e-9);
  EXPECT_NEAR(eval_quintic(q, 14.0, 2), 0.0, 1e-9);
}

TEST(EvalQuintic, BoundaryValuesMatchConditions) {
  const BoundaryCondition bc{1.0, -0.5, 0.2, 4.0, 1.5, -0.1};
  const auto q = solve_quintic(bc, 0.0, 3.0);
  EXPECT_NEAR(eval_quintic(q, 0.0, 0), bc.g_i, 1e-9);
  EXPECT_NEAR(eval_quintic(q, 3.0, 2), bc.g_f_ddot, 1e-9);
}

TEST(EvalQuintic, DerivativeMatchesCentralDifference) {
  const auto q = solve_quintic({0.0, 2.0, -1.0, 5.0, 0.0, 0.0}, 0.0, 4.0);
  const double h = 1e-6;
  for (double t : {0.5, 1.7, 2.9, 3.5}) {
    const double numeric = (eval_quintic(q, t + h, 0) - eval_quintic(q, t - h, 0)) / (2.0 * h);
    EXPECT_NEAR(eval_quintic(q, t, 1), numeric, 1e-5);
  }
}

TEST(EvalQuintic, RangeAndOrderChecks) {
  const auto q = solve_quintic({0, 0, 0, 1, 0, 0}, 0.0, 1.0);
  EXPECT_THROW(eval_quintic(q, -0.1, 0), Error);
  EXPECT_THROW(eval_quintic(q, 1.1, 0), Error);
  EXPECT_THROW(eval_quintic(q, 0.5, 5), Error);
  EXPECT_NO_THROW(eval_quintic(q, 0.5, 4));
}

TEST(SampleEndStates, SingleCountCollapsesToMidpoint) {
  SamplingDomain dom;
  dom.l_min = 0.0;
  dom.l_max = 10.0;
  dom.d_min = -2.0;
  dom.d_max = 2.0;
  dom.tau_min = 2.0;
  dom.tau_max = 4.0;
  dom.n_l = dom.n_d = dom.n_tau = 1;
  const auto states = sample_end_states(dom);
  ASSERT_EQ(states.size(), 1u);
  EXPECT_DOUBLE_EQ(states[0].l, 5.0);
  EXPECT_DOUBLE_EQ(states[0].d, 0.0);
  EXPECT_DOUBLE_EQ(states[0].tau, 3.0);
}

TEST(SampleEndStates, TwoCountHitsEndpoints) {
  SamplingDomain dom;
  dom.l_min = 0.0;
  dom.l_max = 10.0;
  dom.n_l = 2;
  dom.n_d = dom.n_tau = 1;
  const auto states = sample_end_states(dom);
  ASSERT_EQ(states.size(), 2u);
  EXPECT_DOUBLE_EQ(states[0].l, 0.0);
  EXPECT_DOUBLE_EQ(states[1].l, 10.0);
}

TEST(SampleEndStates, LexicographicOrder) {
  SamplingDomain dom;
  dom.l_min = 0.0;
  dom.l_max = 2.0;
  dom.d_min = 0.0;
  dom.d_max = 2.0;
  dom.tau_min = 1.0;
  dom.tau_max = 3.0;
  dom.n_l = dom.n_d = dom.n_tau = 3;
  const auto states = sample_end_states(dom);
  ASSERT_EQ(states.size(), 27u);
  int idx = 0;
  for (int il = 0; il < 3; ++il)
    for (int id = 0; id < 3; ++id)
      for (int it = 0; it < 3; ++it) {
        EXPECT_DOUBLE_EQ(states[static_cast<std::size_t>(idx)].l, static_cast<double>(il));
        EXPECT_DOUBLE_EQ(states[static_cast<std::size_t>(idx)].d, static_cast<double>(id));
        EXPECT_DOUBLE_EQ(states[static_cast<std::size_t>(idx)].tau, 1.0 + it);
        EXPECT_EQ(states[static_cast<std::size_t>(idx)].grid_index, idx);
        ++idx;
      }
}

TEST(GenerateCandidates, TrivialStartEqualsEnd) {
  FrenetState start;
  SamplingDomain dom;
  dom.l_min = dom.l_max = 0.0;
  dom.d_min = dom.d_max = 0.0;
  dom.tau_min = dom.tau_max = 2.0;
  dom.n_l = dom.n_d = dom.n_tau = 1;
  const auto res = generate_candidates(start, dom, {0.0});
  ASSERT_EQ(res.candidates.size(), 1u);
  for (double t = 0.0; t <= 2.0; t += 0.1) {
    EXPECT_NEAR(eval_quintic(res.candidates[0].lon, t, 0), 0.0, 1e-12);
    EXPECT_NEAR(eval_quintic(res.candidates[0].lat, t, 0), 0.0, 1e-12);
  }
}

TEST(GenerateCandidates, FullGridAndBoundaryExactness) {
  FrenetState start{5.0, 10.0, 0.3, -1.0, 0.2, -0.05};
  SamplingDomain dom;
  dom.l_min = 25.0;
  dom.l_max = 65.0;
  dom.d_min = -2.0;
  dom.d_max = 4.0;
  dom.tau_min = 2.0;
  dom.tau_max = 5.0;
  dom.n_l = dom.n_d = dom.n_tau = 3;
  const TerminalPolicy policy{12.0};
  const auto res = generate_candidates(start, dom, policy);
  EXPECT_EQ(res.candidates.size() + static_cast<std::size_t>(res.dropped_ill_conditioned), 27u);
  EXPECT_EQ(res.dropped_ill_conditioned, 0);
  for (const auto& c : res.candidates) {
    EXPECT_NEAR(eval_quintic(c.lon, 0.0, 0), start.l, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lon, 0.0, 1), start.l_dot, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lon, 0.0, 2), start.l_ddot, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lon, c.lon.t_f, 0), c.end_state.l, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lon, c.lon.t_f, 1), policy.v_terminal, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lon, c.lon.t_f, 2), 0.0, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lat, 0.0, 0), start.d, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lat, 0.0, 1), start.d_dot, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lat, 0.0, 2), start.d_ddot, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lat, c.lat.t_f, 0), c.end_state.d, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lat, c.lat.t_f, 1), 0.0, 1e-9);
    EXPECT_NEAR(eval_quintic(c.lat, c.lat.t_f, 2), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(c.lon.t_f - c.lon.t_i, c.end_state.tau);
  }
}

TEST(GenerateCandidates, DeterministicAcrossCalls) {
  FrenetState start{5.0, 10.0, 0.3, -1.0, 0.2, -0.05};
  SamplingDomain dom;
  const auto a = generate_candidates(start, dom, {12.0});
  const auto b = generate_candidates(start, dom, {12.0});
  ASSERT_EQ(a.candidates.size(), b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i)
    for (int k = 0; k < 6; ++k) {
      EXPECT_EQ(a.candidates[i].lon.b[static_cast<std::size_t>(k)],
                b.candidates[i].lon.b[static_cast<std::size_t>(k)]);
      EXPECT_EQ(a.candidates[i].lat.b[static_cast<std::size_t>(k)],
                b.candidates[i].lat.b[static_cast<std::size_t>(k)]);
    }
}

}  // namespace
