#pragma once

#include <cmath>
#include <functional>
#include <sstream>

#include "saferl/rl/rollout.hpp"
#include "saferl/rl/train_common.hpp"

namespace saferl::rl {

struct ModelFreeConfig {
  PpoConfig ppo;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double init_log_std = -0.5108256237659907;  // ln 0.6

  double d = 18.0;
  double beta = 1.0;  // model-free baseline thresholds against d itself
  double lambda_init = 1.0;
  double lambda_lr = 5e-2;
  double lambda_lr_decay = 0.0;
  bool lambda_frozen = false;  // true for the unconstrained PPO agent

  int episodes_per_epoch = 5;
  long total_interactions = 100000;
};

/// Model-free PPO-Lagrangian; with lambda_frozen and lambda_init = 0 it is
/// plain PPO with cost logging. Per epoch: collect -> estimate -> lambda
/// ascent on the fresh batch's empirical discounted cost -> K minibatch
/// passes of actor/critic updates.
inline RunResult train_model_free(env::Env& e, const ModelFreeConfig& cfg, std::uint64_t seed,
                                  Agent* agent_out = nullptr,
                                  const std::function<void(const TrainLogRow&)>& on_row = {}) {
  Rng init_rng(Rng::derive(seed, 1));
  Rng collect_rng(Rng::derive(seed, 2));
  Rng update_rng(Rng::derive(seed, 3));

  LagrangeState lag;
  lag.lambda = cfg.lambda_init;
  lag.d = cfg.d;
  lag.beta = cfg.beta;
  lag.lr = cfg.lambda_lr;
  lag.lr_decay = cfg.lambda_lr_decay;

  Agent agent = make_agent(e.obs_dim(), e.action_dim(), cfg.actor_hidden, cfg.critic_hidden,
                           cfg.ppo, lag, init_rng, cfg.init_log_std);

  RunResult result;
  long cumulative_violations = 0;
  int epoch = 0;
  try {
    while (result.interactions < cfg.total_interactions) {
      CollectResult col = collect_real(e, agent.policy, e.horizon(), cfg.episodes_per_epoch,
                                       cfg.ppo.gamma, collect_rng);
      result.interactions += col.steps;
      cumulative_violations += col.violations;

      if (!cfg.lambda_frozen) {
        agent.lagrange = update_lambda(agent.lagrange, col.mean_cost_return);
      }

      BatchOptions opt;
      opt.gamma = cfg.ppo.gamma;
      opt.gae_lambda = cfg.ppo.gae_lambda;
      opt.normalize_reward_adv = cfg.ppo.normalize_reward_adv;
      RolloutBatch batch = assemble_batch(col.episodes, agent.critics, opt);
      ppo_update(agent, batch, cfg.ppo, update_rng);

      TrainLogRow row;
      row.epoch = epoch;
      row.inner_pass = 0;
      row.interactions = result.interactions;
      row.reward_return = col.mean_reward_return;
      row.cost_return = col.mean_cost_return;
      row.reward_sum = col.mean_reward_sum;
      row.cost_sum = col.mean_cost_sum;
      row.lambda = agent.lagrange.lambda;
      row.violations = col.violations;
      row.cumulative_violations = cumulative_violations;
      result.rows.push_back(row);
      if (on_row) on_row(row);
      ++epoch;
    }
  } catch (const std::runtime_error& err) {
    std::ostringstream os;
    os << "model-free training aborted at epoch " << epoch << " (lambda "
       << agent.lagrange.lambda << "): " << err.what();
    result.aborted = true;
    result.abort_reason = os.str();
    if (agent_out) *agent_out = agent;
    throw TrainingError(os.str());
  }
  if (agent_out) *agent_out = agent;
  return result;
}

}  // namespace saferl::rl
