#pragma once

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "saferl/nn/adam.hpp"
#include "saferl/rl/estimation.hpp"
#include "saferl/rl/policy.hpp"

namespace saferl::rl {

/// Projected-ascent state of the Lagrange multiplier. The effective cost
/// threshold is beta * d; the multiplier step size follows the schedule
/// eta(n) = lr / (1 + lr_decay * n) (constant by default).
struct LagrangeState {
  double lambda = 1.0;
  double d = 18.0;
  double beta = 1.0;
  double lr = 5e-2;
  double lr_decay = 0.0;
  std::int64_t step = 0;

  double rate() const { return lr / (1.0 + lr_decay * static_cast<double>(step)); }

  void validate() const {
    if (lambda < 0.0) throw std::invalid_argument("LagrangeState: lambda must be non-negative");
    if (!(d > 0.0)) throw std::invalid_argument("LagrangeState: threshold d must be positive");
    if (beta < 0.0 || beta > 1.0)
      throw std::invalid_argument("LagrangeState: beta must lie in [0, 1]");
    if (lr < 0.0) throw std::invalid_argument("LagrangeState: negative learning rate");
  }
};

/// lambda' = [lambda + eta (J^C - beta d)]_+ . Ascent on the multiplier:
/// violations of the (tightened) budget push lambda up, slack pulls it down,
/// and the projection keeps it non-negative.
inline LagrangeState update_lambda(LagrangeState ls, double j_c_estimate) {
  ls.validate();
  if (!std::isfinite(j_c_estimate) || j_c_estimate < 0.0) {
    std::ostringstream os;
    os << "update_lambda: cost estimate must be finite and non-negative, got " << j_c_estimate;
    throw std::invalid_argument(os.str());
  }
  ls.lambda = std::max(0.0, ls.lambda + ls.rate() * (j_c_estimate - ls.beta * ls.d));
  ls.step += 1;
  return ls;
}

/// E_t[min(r_t A_t, clip(r_t, 1-eps, 1+eps) A_t)] for one advantage channel.
inline double clipped_surrogate(const GaussianPolicy& policy, const Mat& obs, const Mat& act,
                                const Vec& logp_old, const Vec& adv, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("clipped_surrogate: eps outside (0,1)");
  const int n = static_cast<int>(obs.cols());
  if (act.cols() != n || logp_old.size() != n || adv.size() != n)
    throw std::invalid_argument("clipped_surrogate: batch size mismatch");
  Mat means = nn::forward_batch(policy.trunk, obs);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lp = policy.log_prob_with_mean(means.col(i), act.col(i));
    const double ratio = std::exp(lp - logp_old[i]);
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    acc += std::min(ratio * adv[i], clipped * adv[i]);
  }
  return acc / n;
}

struct PolicyLossResult {
  double loss = 0.0;     // value to minimize
  double jr_clip = 0.0;  // reward-channel clipped surrogate
  double jc_clip = 0.0;  // cost-channel clipped surrogate
  Vec grad;              // d loss / d (trunk params, log_std), flattened
};

/// Lagrangian policy loss -(J^R_clip - lambda J^C_clip) / (1 + lambda)
/// (the 1/(1+lambda) normalization is a switch) with its exact gradient.
/// Column subset `idx` selects the minibatch.
inline PolicyLossResult lagrangian_policy_loss(const GaussianPolicy& policy,
                                               const RolloutBatch& batch,
                                               const std::vector<int>& idx, double lambda,
                                               double eps, bool normalize, bool want_grad = true) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("lagrangian_policy_loss: eps outside (0,1)");
  if (lambda < 0.0) throw std::invalid_argument("lagrangian_policy_loss: negative lambda");
  const int n = static_cast<int>(idx.size());
  if (n == 0) throw std::invalid_argument("lagrangian_policy_loss: empty minibatch");

  Mat obs(batch.obs.rows(), n), act(batch.act.rows(), n);
  for (int i = 0; i < n; ++i) {
    obs.col(i) = batch.obs.col(idx[i]);
    act.col(i) = batch.act.col(idx[i]);
  }

  nn::ForwardTrace trace;
  Mat means = nn::forward_batch(policy.trunk, obs, want_grad ? &trace : nullptr);
  const Vec ls_clamped = policy.clamped_log_std();
  const Vec sigma = ls_clamped.array().exp().matrix();
  const Vec inv_var = sigma.array().square().inverse().matrix();

  const double scale = normalize ? 1.0 / (1.0 + lambda) : 1.0;
  double jr = 0.0, jc = 0.0;
  Mat dl_dmean;
  Vec dl_dlogstd;
  if (want_grad) {
    dl_dmean = Mat::Zero(means.rows(), n);
    dl_dlogstd = Vec::Zero(policy.log_std.size());
  }

  for (int i = 0; i < n; ++i) {
    const double lp = policy.log_prob_with_mean(means.col(i), act.col(i));
    const double ratio = std::exp(lp - batch.logp_old[idx[i]]);
    if (!std::isfinite(ratio)) {
      std::ostringstream os;
      os << "lagrangian_policy_loss: non-finite ratio " << ratio << " at sample " << idx[i];
      throw std::runtime_error(os.str());
    }
    const double ar = batch.adv_r[idx[i]];
    const double ac = batch.adv_c[idx[i]];
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    jr += std::min(ratio * ar, clipped * ar);
    jc += std::min(ratio * ac, clipped * ac);
    if (!want_grad) continue;
    // d surrogate / d logp is ratio*A unless the min selects a saturated clip
    const bool r_active = !((ar > 0.0 && ratio > 1.0 + eps) || (ar < 0.0 && ratio < 1.0 - eps));
    const bool c_active = !((ac > 0.0 && ratio > 1.0 + eps) || (ac < 0.0 && ratio < 1.0 - eps));
    const double ds_r = r_active ? ratio * ar : 0.0;
    const double ds_c = c_active ? ratio * ac : 0.0;
    const double dloss_dlp = -scale * (ds_r - lambda * ds_c) / n;
    // Gaussian: d logp / d mean = (a - mu) / sigma^2,
    //           d logp / d log_std = ((a - mu)/sigma)^2 - 1 (inside the clamp)
    Vec diff = act.col(i) - means.col(i);
    dl_dmean.col(i) = dloss_dlp * diff.cwiseProduct(inv_var);
    for (Eigen::Index j = 0; j < dl_dlogstd.size(); ++j) {
      const bool inside = policy.log_std[j] > GaussianPolicy::kLogStdMin &&
                          policy.log_std[j] < GaussianPolicy::kLogStdMax;
      if (inside) dl_dlogstd[j] += dloss_dlp * (diff[j] * diff[j] * inv_var[j] - 1.0);
    }
  }
  jr /= n;
  jc /= n;

  PolicyLossResult out;
  out.jr_clip = jr;
  out.jc_clip = jc;
  out.loss = -scale * (jr - lambda * jc);
  if (!std::isfinite(out.loss)) {
    std::ostringstream os;
    os << "lagrangian_policy_loss: non-finite loss " << out.loss;
    throw std::runtime_error(os.str());
  }
  if (want_grad) {
    nn::MlpGrads g = nn::zero_grads(policy.trunk);
    nn::accumulate_backward(policy.trunk, trace, dl_dmean, g);
    out.grad = Vec(policy.param_count());
    out.grad.head(nn::param_count(policy.trunk)) = nn::flatten(g);
    out.grad.tail(dl_dlogstd.size()) = dl_dlogstd;
  }
  return out;
}

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  int update_epochs = 40;  // minibatch passes per collected batch
  int minibatch = 256;
  bool normalize_reward_adv = true;
  bool lagrangian_loss_norm = true;
};

/// Actor, critics, their optimizers, and the multiplier: everything one
/// training run mutates.
struct Agent {
  GaussianPolicy policy;
  CriticPair critics;
  nn::AdamState opt_actor;
  nn::AdamState opt_vr;
  nn::AdamState opt_vc;
  LagrangeState lagrange;
};

inline Agent make_agent(int obs_dim, int action_dim, const std::vector<int>& actor_hidden,
                        const std::vector<int>& critic_hidden, const PpoConfig& cfg,
                        const LagrangeState& lagrange, Rng& rng, double init_log_std) {
  Agent a;
  a.policy = make_policy(obs_dim, action_dim, actor_hidden, rng, init_log_std);
  std::vector<int> vsizes;
  vsizes.push_back(obs_dim);
  for (int h : critic_hidden) vsizes.push_back(h);
  vsizes.push_back(1);
  a.critics.vr = nn::make_mlp(vsizes, rng);
  a.critics.vc = nn::make_mlp(vsizes, rng);
  a.opt_actor = nn::make_adam(a.policy.param_count(), cfg.actor_lr);
  a.opt_vr = nn::make_adam(nn::param_count(a.critics.vr), cfg.critic_lr);
  a.opt_vc = nn::make_adam(nn::param_count(a.critics.vc), cfg.critic_lr);
  a.lagrange = lagrange;
  a.lagrange.validate();
  return a;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double jr_clip = 0.0;
  double jc_clip = 0.0;
  double value_loss_r = 0.0;
  double value_loss_c = 0.0;
};

/// K epochs of shuffled minibatch updates: one actor step and one step per
/// critic for every minibatch. The multiplier is not touched here; callers
/// update it once per data-collection phase before the policy moves.
inline UpdateStats ppo_update(Agent& agent, const RolloutBatch& batch, const PpoConfig& cfg,
                              Rng& rng) {
  const int n = batch.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  UpdateStats stats;
  int stat_count = 0;
  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += cfg.minibatch) {
      const int stop = std::min(n, start + cfg.minibatch);
      std::vector<int> idx(order.begin() + start, order.begin() + stop);

      auto pl = lagrangian_policy_loss(agent.policy, batch, idx, agent.lagrange.lambda,
                                       cfg.clip_eps, cfg.lagrangian_loss_norm);
      Vec theta = agent.policy.flat();
      nn::adam_step(theta, pl.grad, agent.opt_actor);
      agent.policy.set_flat(theta);

      Mat obs(batch.obs.rows(), static_cast<int>(idx.size()));
      Vec tr(static_cast<int>(idx.size())), tc(static_cast<int>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        obs.col(static_cast<int>(i)) = batch.obs.col(idx[i]);
        tr[static_cast<int>(i)] = batch.target_r[idx[i]];
        tc[static_cast<int>(i)] = batch.target_c[idx[i]];
      }
      const double lr_ = critic_update(agent.critics.vr, agent.opt_vr, obs, tr);
      const double lc_ = critic_update(agent.critics.vc, agent.opt_vc, obs, tc);

      stats.policy_loss += pl.loss;
      stats.jr_clip += pl.jr_clip;
      stats.jc_clip += pl.jc_clip;
      stats.value_loss_r += lr_;
      stats.value_loss_c += lc_;
      ++stat_count;
    }
  }
  if (stat_count > 0) {
    stats.policy_loss /= stat_count;
    stats.jr_clip /= stat_count;
    stats.jc_clip /= stat_count;
    stats.value_loss_r /= stat_count;
    stats.value_loss_c /= stat_count;
  }
  return stats;
}

}  // namespace saferl::rl
