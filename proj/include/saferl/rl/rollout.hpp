#pragma once

#include <vector>

#include "saferl/env/env.hpp"
#include "saferl/rl/policy.hpp"

namespace saferl::rl {

struct CollectResult {
  std::vector<env::Episode> episodes;
  long steps = 0;       // real interactions consumed
  long violations = 0;  // steps with cost == 1
  double mean_reward_return = 0.0;  // discounted
  double mean_cost_return = 0.0;    // discounted
  double mean_reward_sum = 0.0;     // undiscounted
  double mean_cost_sum = 0.0;       // undiscounted
};

/// Runs `episodes` episodes of at most `horizon` steps with the stochastic
/// policy. Episodes store the raw policy samples and their log-probabilities;
/// the environment applies (and records) any clipping itself.
inline CollectResult collect_real(env::Env& e, const GaussianPolicy& policy, int horizon,
                                  int episodes, double gamma, Rng& rng) {
  CollectResult out;
  for (int k = 0; k < episodes; ++k) {
    env::Episode ep;
    ep.source = env::Episode::Source::Real;
    Vec obs = e.reset(rng.next_u64());
    ep.states.push_back(obs);
    for (int t = 0; t < horizon; ++t) {
      auto [action, logp] = policy.sample(obs, rng);
      env::Transition tr = e.step(action);
      ep.actions.push_back(action);
      ep.logps.push_back(logp);
      ep.rewards.push_back(tr.reward);
      ep.costs.push_back(tr.cost);
      ep.states.push_back(tr.next_state);
      obs = tr.next_state;
      out.steps += 1;
      if (tr.cost == 1.0) out.violations += 1;
      if (tr.done) {
        ep.terminal = true;
        break;
      }
    }
    if (ep.length() > 0) {
      out.mean_reward_return += env::episode_return(ep, gamma, env::Channel::Reward);
      out.mean_cost_return += env::episode_return(ep, gamma, env::Channel::Cost);
      out.mean_reward_sum += env::undiscounted_sum(ep, env::Channel::Reward);
      out.mean_cost_sum += env::undiscounted_sum(ep, env::Channel::Cost);
      out.episodes.push_back(std::move(ep));
    }
  }
  const double n = std::max<std::size_t>(1, out.episodes.size());
  out.mean_reward_return /= n;
  out.mean_cost_return /= n;
  out.mean_reward_sum /= n;
  out.mean_cost_sum /= n;
  return out;
}

}  // namespace saferl::rl
