#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "saferl/env/env.hpp"
#include "saferl/nn/adam.hpp"
#include "saferl/nn/mlp.hpp"

namespace saferl::rl {

using env::Channel;
using env::Episode;

/// Truncated discounted tail sums x_t + g x_{t+1} + ... over one channel.
/// The last entry equals that step's immediate signal.
inline std::vector<double> returns_to_go(const Episode& ep, double gamma, Channel channel) {
  const int n = ep.length();
  if (n < 1) throw std::invalid_argument("returns_to_go: empty episode");
  const auto& xs = channel == Channel::Reward ? ep.rewards : ep.costs;
  std::vector<double> out(n);
  double acc = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    acc = xs[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

/// Value net evaluated at every state of an episode (including the final
/// one), as a flat vector of length L+1.
inline Vec critic_values(const nn::MlpParams& v, const Episode& ep) {
  const int n = static_cast<int>(ep.states.size());
  Mat x(ep.states[0].size(), n);
  for (int i = 0; i < n; ++i) x.col(i) = ep.states[i];
  return nn::forward_batch(v, x).row(0);
}

/// Generalized advantage estimation over one channel:
///   delta_t = x_{t+1} + g V(s_{t+1}) - V(s_t),  A_t = sum_l (g lam)^l delta_{t+l},
/// truncated at the episode end. The bootstrap value at the final state is 0
/// for terminal episodes and V(s_L) for horizon-cut ones.
inline std::vector<double> gae(const Episode& ep, const nn::MlpParams& v, double gamma, double lam,
                               Channel channel) {
  const int n = ep.length();
  if (n < 1) throw std::invalid_argument("gae: empty episode");
  if (static_cast<int>(ep.states.size()) != n + 1)
    throw std::invalid_argument("gae: episode must store L+1 states");
  const auto& xs = channel == Channel::Reward ? ep.rewards : ep.costs;
  Vec values = critic_values(v, ep);
  std::vector<double> adv(n);
  double acc = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double v_next = (t == n - 1 && ep.terminal) ? 0.0 : values[t + 1];
    const double delta = xs[t] + gamma * v_next - values[t];
    acc = delta + gamma * lam * acc;
    adv[t] = acc;
  }
  return adv;
}

/// Reward- and cost-channel value networks (shared input dimension).
struct CriticPair {
  nn::MlpParams vr;
  nn::MlpParams vc;
};

/// Flattened on-policy batch: one column/entry per visited state, plus the
/// quantities PPO needs per sample. Episode boundaries and provenance are
/// retained for cost bookkeeping.
struct RolloutBatch {
  Mat obs;       // obs_dim x N
  Mat act;       // act_dim x N
  Vec logp_old;  // N
  Vec adv_r;     // N (standardized when enabled)
  Vec adv_c;     // N (never standardized; scale carries the constraint)
  Vec rtg_r;     // N plain returns-to-go
  Vec rtg_c;     // N
  Vec target_r;  // N value-regression targets (returns-to-go + bootstrap tail)
  Vec target_c;  // N
  std::vector<int> episode_offset;  // start index of each episode; size E+1
  std::vector<Episode::Source> source;

  int size() const { return static_cast<int>(logp_old.size()); }
  int num_episodes() const { return static_cast<int>(source.size()); }
};

struct BatchOptions {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  bool normalize_reward_adv = true;
};

/// Builds the training batch: returns-to-go, GAE advantages for both
/// channels, and critic targets. Horizon-cut episodes bootstrap both the
/// advantage recursion and the value targets with V at the cut state.
inline RolloutBatch assemble_batch(const std::vector<Episode>& episodes, const CriticPair& critics,
                                   const BatchOptions& opt) {
  if (episodes.empty()) throw std::invalid_argument("assemble_batch: no episodes");
  int total = 0;
  for (const auto& ep : episodes) total += ep.length();
  if (total == 0) throw std::invalid_argument("assemble_batch: empty episodes");

  const int obs_dim = static_cast<int>(episodes[0].states[0].size());
  const int act_dim = static_cast<int>(episodes[0].actions[0].size());
  RolloutBatch b;
  b.obs.resize(obs_dim, total);
  b.act.resize(act_dim, total);
  b.logp_old.resize(total);
  b.adv_r.resize(total);
  b.adv_c.resize(total);
  b.rtg_r.resize(total);
  b.rtg_c.resize(total);
  b.target_r.resize(total);
  b.target_c.resize(total);
  b.episode_offset.push_back(0);

  int k = 0;
  for (const auto& ep : episodes) {
    const int n = ep.length();
    auto rtg_r = returns_to_go(ep, opt.gamma, Channel::Reward);
    auto rtg_c = returns_to_go(ep, opt.gamma, Channel::Cost);
    auto adv_r = gae(ep, critics.vr, opt.gamma, opt.gae_lambda, Channel::Reward);
    auto adv_c = gae(ep, critics.vc, opt.gamma, opt.gae_lambda, Channel::Cost);
    const double boot_r = ep.terminal ? 0.0 : critic_values(critics.vr, ep)[n];
    const double boot_c = ep.terminal ? 0.0 : critic_values(critics.vc, ep)[n];
    for (int t = 0; t < n; ++t) {
      b.obs.col(k) = ep.states[t];
      b.act.col(k) = ep.actions[t];
      b.logp_old[k] = ep.logps[t];
      b.adv_r[k] = adv_r[t];
      b.adv_c[k] = adv_c[t];
      b.rtg_r[k] = rtg_r[t];
      b.rtg_c[k] = rtg_c[t];
      const double g = std::pow(opt.gamma, n - t);
      b.target_r[k] = rtg_r[t] + g * boot_r;
      b.target_c[k] = rtg_c[t] + g * boot_c;
      ++k;
    }
    b.episode_offset.push_back(k);
    b.source.push_back(ep.source);
  }

  if (opt.normalize_reward_adv) {
    // Reward advantages are standardized (mean 0, std 1). Cost advantages are
    // divided by the same batch factor -- never by their own statistics -- so
    // the two surrogate terms stay commensurable while the cost channel keeps
    // its constraint-relative scale. Scaling the channels independently lets a
    // near-deterministic batch amplify the reward contrast without bound.
    const double mean = b.adv_r.mean();
    const double var = (b.adv_r.array() - mean).square().sum() / std::max(1, total - 1);
    const double sd = std::sqrt(std::max(var, 0.0));
    b.adv_r.array() -= mean;
    if (sd > 1e-8) {
      b.adv_r /= sd;
      b.adv_c /= sd;
    }
  }
  return b;
}

/// One Adam step of mean-squared-error regression for one critic on the
/// given (mini)batch. Returns the pre-step loss.
inline double critic_update(nn::MlpParams& v, nn::AdamState& opt, const Mat& obs,
                            const Vec& targets) {
  if (obs.cols() != targets.size())
    throw std::invalid_argument("critic_update: batch size mismatch");
  Vec grad;
  const double loss = nn::mse_loss_grad(v, obs, targets.transpose(), &grad);
  Vec theta = nn::flatten(v);
  nn::adam_step(theta, grad, opt);
  nn::unflatten(theta, v);
  return loss;
}

}  // namespace saferl::rl
