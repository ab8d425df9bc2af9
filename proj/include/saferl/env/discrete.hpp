#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "saferl/env/env.hpp"

namespace saferl::env {

/// Tabular CMDP with a fixed initial state. P[a](s, s') is the transition
/// matrix per action; R[a](s, s') and C[a](s, s') the signal tables.
struct DiscreteCmdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Mat> P;
  std::vector<Mat> R;
  std::vector<Mat> C;
  double gamma = 0.9;
  int initial_state = 0;

  void validate() const {
    if (num_states <= 0 || num_actions <= 0)
      throw std::invalid_argument("DiscreteCmdp: empty state or action space");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw std::invalid_argument("DiscreteCmdp: gamma must lie strictly inside (0,1)");
    if (static_cast<int>(P.size()) != num_actions || static_cast<int>(R.size()) != num_actions ||
        static_cast<int>(C.size()) != num_actions)
      throw std::invalid_argument("DiscreteCmdp: table count mismatch");
    for (int a = 0; a < num_actions; ++a) {
      if (P[a].rows() != num_states || P[a].cols() != num_states)
        throw std::invalid_argument("DiscreteCmdp: transition matrix shape mismatch");
      for (int s = 0; s < num_states; ++s) {
        if (std::abs(P[a].row(s).sum() - 1.0) > 1e-12)
          throw std::invalid_argument("DiscreteCmdp: transition row does not sum to 1");
        for (int s2 = 0; s2 < num_states; ++s2) {
          if (P[a](s, s2) < 0.0) throw std::invalid_argument("DiscreteCmdp: negative probability");
          if (C[a](s, s2) < 0.0) throw std::invalid_argument("DiscreteCmdp: negative cost");
        }
      }
    }
    if (initial_state < 0 || initial_state >= num_states)
      throw std::invalid_argument("DiscreteCmdp: bad initial state");
  }

  /// Expected single-stage signals r(s,a) = sum_s' P(s'|s,a) X(s,a,s').
  double expected(int s, int a, Channel ch) const {
    const Mat& x = ch == Channel::Reward ? R[a] : C[a];
    return P[a].row(s).dot(x.row(s));
  }
};

/// 3-state, 2-action chain with a risky shortcut:
///   state 0 --safe--> state 1 --(any)--> state 2;  state 0 --risky--> state 2
/// Entering state 2 earns reward 1 (including its self-loop), the risky jump
/// carries unit cost. With gamma = 0.9 and a feasible-cost budget between the
/// two paths' costs, the best deterministic feasible policy is the safe path.
inline DiscreteCmdp make_risky_chain(double gamma = 0.9) {
  DiscreteCmdp m;
  m.num_states = 3;
  m.num_actions = 2;
  m.gamma = gamma;
  m.initial_state = 0;
  const int kSafe = 0, kRisky = 1;
  const int goal = 2;
  for (int a = 0; a < 2; ++a) {
    m.P.push_back(Mat::Zero(3, 3));
    m.R.push_back(Mat::Zero(3, 3));
    m.C.push_back(Mat::Zero(3, 3));
  }
  m.P[kSafe](0, 1) = 1.0;
  m.P[kRisky](0, goal) = 1.0;
  for (int a = 0; a < 2; ++a) {
    m.P[a](1, goal) = 1.0;
    m.P[a](goal, goal) = 1.0;
    for (int s = 0; s < 3; ++s) m.R[a](s, goal) = 1.0;
  }
  m.C[kRisky](0, goal) = 1.0;
  m.validate();
  return m;
}

/// Chain variant whose every transition costs 1; with d = 0 it is infeasible.
inline DiscreteCmdp make_all_cost_chain(double gamma = 0.9) {
  DiscreteCmdp m = make_risky_chain(gamma);
  for (int a = 0; a < m.num_actions; ++a) m.C[a] = Mat::Ones(3, 3);
  return m;
}

/// Continuous-interface wrapper so Gaussian-policy agents can run on tabular
/// CMDPs: observations are one-hot state encodings, and the scalar action in
/// [-1, 1] is binned into the discrete action set.
class DiscreteEnvAdapter : public Env {
 public:
  DiscreteEnvAdapter(DiscreteCmdp m, int horizon)
      : m_(std::move(m)), horizon_(horizon), rng_(0), state_(m_.initial_state) {
    m_.validate();
  }

  std::string name() const override { return "discrete_chain"; }
  int obs_dim() const override { return m_.num_states; }
  int action_dim() const override { return 1; }
  int horizon() const override { return horizon_; }

  Vec reset(std::uint64_t seed) override {
    rng_ = Rng(Rng::derive(seed, 0xd15c0));
    state_ = m_.initial_state;  // fixed initial state, always
    return one_hot(state_);
  }

  Vec sample_initial(Rng&) const override { return one_hot(m_.initial_state); }

  Transition step(const Vec& action) override {
    Transition tr;
    tr.state = one_hot(state_);
    tr.action = clip_action(action, &tr.action_clipped);
    const int a = bin_action(tr.action[0]);
    const double u = rng_.uniform();
    double acc = 0.0;
    int next = m_.num_states - 1;
    for (int s2 = 0; s2 < m_.num_states; ++s2) {
      acc += m_.P[a](state_, s2);
      if (u < acc) {
        next = s2;
        break;
      }
    }
    tr.reward = m_.R[a](state_, next);
    tr.cost = m_.C[a](state_, next);
    tr.done = false;  // infinite-horizon model; episodes end at the horizon cut
    state_ = next;
    tr.next_state = one_hot(state_);
    return tr;
  }

  double reward_from(const Vec& obs, const Vec& action, const Vec& next_obs) const override {
    return lookup(obs, action, next_obs, Channel::Reward);
  }

  double cost_from(const Vec& obs, const Vec& action, const Vec& next_obs) const override {
    return lookup(obs, action, next_obs, Channel::Cost);
  }

  int bin_action(double a) const {
    const double span = action_high() - action_low();
    int k = static_cast<int>((a - action_low()) / span * m_.num_actions);
    return std::clamp(k, 0, m_.num_actions - 1);
  }

  const DiscreteCmdp& model() const { return m_; }

 private:
  double lookup(const Vec& obs, const Vec& action, const Vec& next_obs, Channel ch) const {
    int s, s2;
    obs.maxCoeff(&s);
    next_obs.maxCoeff(&s2);
    const int a = bin_action(std::clamp(action[0], action_low(), action_high()));
    return (ch == Channel::Reward ? m_.R[a] : m_.C[a])(s, s2);
  }

  Vec one_hot(int s) const {
    Vec v = Vec::Zero(m_.num_states);
    v[s] = 1.0;
    return v;
  }

  DiscreteCmdp m_;
  int horizon_;
  Rng rng_;
  int state_;
};

}  // namespace saferl::env
