#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "saferl/core/rng.hpp"
#include "saferl/env/oracle.hpp"

using namespace saferl;
using namespace saferl::env;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DiscreteCmdp random_cmdp(Rng& rng, int ns, int na) {
  DiscreteCmdp m;
  m.num_states = ns;
  m.num_actions = na;
  m.gamma = 0.9;
  m.initial_state = 0;
  for (int a = 0; a < na; ++a) {
    Mat p(ns, ns), r(ns, ns), c(ns, ns);
    for (int s = 0; s < ns; ++s) {
      double row_sum = 0.0;
      for (int s2 = 0; s2 < ns; ++s2) {
        p(s, s2) = rng.uniform(0.01, 1.0);
        row_sum += p(s, s2);
        r(s, s2) = rng.uniform(0, 1);
        c(s, s2) = rng.below(3) == 0 ? 1.0 : 0.0;
      }
      p.row(s) /= row_sum;
      // renormalization keeps rows summing to 1 within strict tolerance
      p(s, ns - 1) += 1.0 - p.row(s).sum();
    }
    m.P.push_back(p);
    m.R.push_back(r);
    m.C.push_back(c);
  }
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("chain: hand-computed values for the three pure strategies") {
  DiscreteCmdp m = make_risky_chain(0.9);
  // risky at the start state: enter the goal immediately, J^R = 1/(1-g) = 10
  PolicyMatrix risky = deterministic_policy(m, {1, 0, 0});
  PolicyMatrix safe = deterministic_policy(m, {0, 0, 0});
  CHECK(policy_value(m, risky, Channel::Reward) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(policy_value(m, risky, Channel::Cost) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(policy_value(m, safe, Channel::Reward) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(policy_value(m, safe, Channel::Cost) == doctest::Approx(0.0));
}

TEST_CASE("oracle: vacuous constraint matches value iteration") {
  DiscreteCmdp m = make_risky_chain(0.9);
  auto vi = value_iteration(m);
  auto sol = oracle_solve(m, kInf);
  REQUIRE(sol.has_value());
  CHECK(sol->reward_return == doctest::Approx(vi.values[m.initial_state]).epsilon(1e-9));
  CHECK(sol->reward_return == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("oracle: infeasible when every transition costs and d = 0") {
  DiscreteCmdp m = make_all_cost_chain(0.9);
  auto sol = oracle_solve(m, 0.0);
  CHECK_FALSE(sol.has_value());
  CHECK_FALSE(enumerate_deterministic(m, 0.0).has_value());
  CHECK_FALSE(occupancy_lp(m, 0.0).has_value());
}

TEST_CASE("oracle: enumeration picks the safe path for an intermediate budget") {
  // d = 0.5 sits between the safe path's cost (0) and the shortcut's (1).
  DiscreteCmdp m = make_risky_chain(0.9);
  auto det = enumerate_deterministic(m, 0.5);
  REQUIRE(det.has_value());
  CHECK(det->reward_return == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(det->cost_return == doctest::Approx(0.0));
  // the witness takes the safe action at the start state
  CHECK(det->policy(0, 0) == 1.0);
}

TEST_CASE("oracle: LP refinement mixes the shortcut up to the budget") {
  // Randomizing p of the way onto the shortcut gives J^R = 9 + p, J^C = p,
  // so the constrained optimum is p = d.
  DiscreteCmdp m = make_risky_chain(0.9);
  auto sol = oracle_solve(m, 0.5);
  REQUIRE(sol.has_value());
  CHECK(sol->reward_return == doctest::Approx(9.5).epsilon(1e-9));
  CHECK(sol->cost_return <= 0.5 + 1e-9);
  CHECK(sol->has_deterministic);
  CHECK(sol->deterministic_reward_return == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(sol->policy(0, 1) == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("oracle: full enumeration of the chain's 8 deterministic policies") {
  DiscreteCmdp m = make_risky_chain(0.9);
  // independent oracle: walk every action assignment by hand
  double best = -kInf;
  int feasible = 0;
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2) {
        PolicyMatrix pi = deterministic_policy(m, {a0, a1, a2});
        const double jc = policy_value(m, pi, Channel::Cost);
        if (jc > 0.5) continue;
        ++feasible;
        best = std::max(best, policy_value(m, pi, Channel::Reward));
      }
  CHECK(feasible == 4);  // safe start action, both actions elsewhere
  auto det = enumerate_deterministic(m, 0.5);
  REQUIRE(det.has_value());
  CHECK(det->reward_return == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("oracle: feasibility and dominance properties on random CMDPs") {
  Rng rng(123);
  for (int rep = 0; rep < 25; ++rep) {
    DiscreteCmdp m = random_cmdp(rng, 2 + rng.below_int(3), 2 + rng.below_int(2));
    const double d = rng.uniform(0.0, 6.0);
    auto det = enumerate_deterministic(m, d);
    auto sol = oracle_solve(m, d);
    auto unconstrained = value_iteration(m);
    if (det) {
      REQUIRE(sol.has_value());
      // solution is feasible and at least as good as any deterministic policy
      CHECK(sol->cost_return <= d + 1e-9);
      CHECK(sol->reward_return >= det->reward_return - 1e-9);
      CHECK(sol->reward_return <= unconstrained.values[m.initial_state] + 1e-7);
      // re-evaluating the witness reproduces the reported returns
      CHECK(policy_value(m, sol->policy, Channel::Reward) ==
            doctest::Approx(sol->reward_return).epsilon(1e-9));
    }
    if (!sol) CHECK_FALSE(det.has_value());
  }
}

TEST_CASE("oracle: rejects oversized policy spaces") {
  Rng rng(5);
  DiscreteCmdp m = random_cmdp(rng, 4, 2);
  CHECK_NOTHROW(enumerate_deterministic(m, kInf));
  DiscreteCmdp big = random_cmdp(rng, 4, 2);
  big.num_states = 40;  // inconsistent on purpose; guard fires before validate
  CHECK_THROWS(enumerate_deterministic(big, 1.0));
}
