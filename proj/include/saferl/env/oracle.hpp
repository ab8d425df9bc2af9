#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "saferl/core/lp.hpp"
#include "saferl/env/discrete.hpp"

namespace saferl::env {

/// Row-stochastic policy matrix: policy(s, a) = pi(a | s).
using PolicyMatrix = Mat;

inline void check_policy(const DiscreteCmdp& m, const PolicyMatrix& pi) {
  if (pi.rows() != m.num_states || pi.cols() != m.num_actions)
    throw std::invalid_argument("policy matrix shape mismatch");
  for (int s = 0; s < m.num_states; ++s)
    if (std::abs(pi.row(s).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("policy rows must sum to 1");
}

/// Exact policy evaluation: solves (I - gamma P_pi) v = r_pi.
inline Vec policy_evaluation(const DiscreteCmdp& m, const PolicyMatrix& pi, Channel ch) {
  check_policy(m, pi);
  const int n = m.num_states;
  Mat p_pi = Mat::Zero(n, n);
  Vec r_pi = Vec::Zero(n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m.num_actions; ++a) {
      const double w = pi(s, a);
      if (w == 0.0) continue;
      p_pi.row(s) += w * m.P[a].row(s);
      r_pi[s] += w * m.expected(s, a, ch);
    }
  }
  Mat lhs = Mat::Identity(n, n) - m.gamma * p_pi;
  return lhs.partialPivLu().solve(r_pi);
}

inline double policy_value(const DiscreteCmdp& m, const PolicyMatrix& pi, Channel ch) {
  return policy_evaluation(m, pi, ch)[m.initial_state];
}

inline PolicyMatrix deterministic_policy(const DiscreteCmdp& m, const std::vector<int>& actions) {
  PolicyMatrix pi = Mat::Zero(m.num_states, m.num_actions);
  for (int s = 0; s < m.num_states; ++s) pi(s, actions[s]) = 1.0;
  return pi;
}

struct ValueIterationResult {
  Vec values;
  std::vector<int> greedy;
};

/// Unconstrained optimal values for one channel (maximizing reward;
/// pass Channel::Cost to maximize cost, which is only used in tests).
inline ValueIterationResult value_iteration(const DiscreteCmdp& m, Channel ch = Channel::Reward,
                                            double tol = 1e-12, int max_iter = 1000000) {
  const int n = m.num_states;
  Vec v = Vec::Zero(n);
  ValueIterationResult out;
  out.greedy.assign(n, 0);
  for (int it = 0; it < max_iter; ++it) {
    Vec v2(n);
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < m.num_actions; ++a) {
        const double q = m.expected(s, a, ch) + m.gamma * m.P[a].row(s).dot(v);
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      v2[s] = best;
      out.greedy[s] = best_a;
    }
    const double diff = (v2 - v).cwiseAbs().maxCoeff();
    v = v2;
    if (diff < tol * (1.0 - m.gamma)) break;
  }
  out.values = v;
  return out;
}

struct OracleSolution {
  bool feasible = false;
  double reward_return = 0.0;  // J^R of the returned policy
  double cost_return = 0.0;    // J^C of the returned policy
  PolicyMatrix policy;         // witness (possibly randomized)
  // best feasible deterministic policy from enumeration, when one exists
  bool has_deterministic = false;
  double deterministic_reward_return = 0.0;
  PolicyMatrix deterministic_policy_matrix;
};

/// Enumerates all |A|^|S| deterministic policies exactly.
inline std::optional<OracleSolution> enumerate_deterministic(const DiscreteCmdp& m, double d) {
  m.validate();
  double total = std::pow(static_cast<double>(m.num_actions), m.num_states);
  if (total > 2e6) throw std::invalid_argument("enumerate_deterministic: policy space too large");
  std::vector<int> actions(m.num_states, 0);
  std::optional<OracleSolution> best;
  const long count = static_cast<long>(total);
  for (long idx = 0; idx < count; ++idx) {
    long rem = idx;
    for (int s = 0; s < m.num_states; ++s) {
      actions[s] = static_cast<int>(rem % m.num_actions);
      rem /= m.num_actions;
    }
    PolicyMatrix pi = deterministic_policy(m, actions);
    const double jc = policy_value(m, pi, Channel::Cost);
    if (jc > d + 1e-12) continue;
    const double jr = policy_value(m, pi, Channel::Reward);
    if (!best || jr > best->reward_return) {
      OracleSolution sol;
      sol.feasible = true;
      sol.reward_return = jr;
      sol.cost_return = jc;
      sol.policy = pi;
      sol.has_deterministic = true;
      sol.deterministic_reward_return = jr;
      sol.deterministic_policy_matrix = pi;
      best = sol;
    }
  }
  return best;
}

/// Exact constrained solve via the discounted occupancy-measure LP:
///   max sum_{s,a} x(s,a) r(s,a)
///   s.t. sum_a x(s',a) - gamma sum_{s,a} P(s'|s,a) x(s,a) = mu(s')
///        sum_{s,a} x(s,a) c(s,a) <= d,   x >= 0.
/// The witness policy is pi(a|s) = x(s,a) / sum_a x(s,a).
inline std::optional<OracleSolution> occupancy_lp(const DiscreteCmdp& m, double d) {
  m.validate();
  const int n = m.num_states, k = m.num_actions;
  const int nv = n * k;
  auto var = [k](int s, int a) { return s * k + a; };

  LpProblem lp;
  lp.a_eq = Mat::Zero(n, nv);
  lp.b_eq = Vec::Zero(n);
  lp.c = Vec::Zero(nv);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < k; ++a) {
      lp.a_eq(s, var(s, a)) += 1.0;
      lp.c[var(s, a)] = m.expected(s, a, Channel::Reward);
    }
  }
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < k; ++a)
      for (int s2 = 0; s2 < n; ++s2) lp.a_eq(s2, var(s, a)) -= m.gamma * m.P[a](s, s2);
  lp.b_eq[m.initial_state] = 1.0;

  const bool constrained = std::isfinite(d);
  if (constrained) {
    lp.a_ub = Mat::Zero(1, nv);
    lp.b_ub = Vec::Zero(1);
    for (int s = 0; s < n; ++s)
      for (int a = 0; a < k; ++a) lp.a_ub(0, var(s, a)) = m.expected(s, a, Channel::Cost);
    lp.b_ub[0] = d;
  } else {
    lp.a_ub = Mat::Zero(0, nv);
    lp.b_ub = Vec::Zero(0);
  }

  LpSolution s = solve_lp(lp);
  if (s.status != LpStatus::Optimal) return std::nullopt;

  OracleSolution out;
  out.feasible = true;
  out.policy = Mat::Zero(n, k);
  for (int st = 0; st < n; ++st) {
    double mass = 0.0;
    for (int a = 0; a < k; ++a) mass += std::max(0.0, s.x[var(st, a)]);
    if (mass > 1e-12) {
      for (int a = 0; a < k; ++a) out.policy(st, a) = std::max(0.0, s.x[var(st, a)]) / mass;
    } else {
      out.policy(st, 0) = 1.0;  // unreachable state, action arbitrary
    }
  }
  // Report exact returns of the witness policy rather than the LP objective,
  // so feasibility can be asserted against policy evaluation directly.
  out.reward_return = policy_value(m, out.policy, Channel::Reward);
  out.cost_return = policy_value(m, out.policy, Channel::Cost);
  return out;
}

/// Best feasible policy for max J^R s.t. J^C <= d. Runs the deterministic
/// enumeration and the occupancy LP; the LP value is returned whenever
/// randomization strictly helps. Returns nullopt when no policy meets d.
inline std::optional<OracleSolution> oracle_solve(const DiscreteCmdp& m, double d) {
  auto det = enumerate_deterministic(m, d);
  auto lp = occupancy_lp(m, d);
  if (!lp && !det) return std::nullopt;
  if (lp && lp->cost_return > d + 1e-9) lp.reset();  // numerically unusable witness
  std::optional<OracleSolution> out;
  if (lp && (!det || lp->reward_return > det->reward_return + 1e-12)) {
    out = lp;
  } else if (det) {
    out = det;
  } else {
    out = lp;
  }
  if (out && det) {
    out->has_deterministic = true;
    out->deterministic_reward_return = det->reward_return;
    out->deterministic_policy_matrix = det->policy;
  }
  return out;
}

}  // namespace saferl::env
