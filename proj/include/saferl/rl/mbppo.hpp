#pragma once

#include <cmath>
#include <functional>
#include <sstream>

#include "saferl/model/ensemble.hpp"
#include "saferl/rl/rollout.hpp"
#include "saferl/rl/train_common.hpp"

namespace saferl::rl {

struct MbppoConfig {
  PpoConfig ppo;
  model::EnsembleConfig model;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double init_log_std = -0.5108256237659907;  // ln 0.6

  double d = 18.0;
  double beta = 0.02;
  double lambda_init = 1.0;
  double lambda_lr = 5e-2;
  double lambda_lr_decay = 0.0;

  int model_horizon = 80;           // H, must stay below the environment horizon
  int real_episodes_per_epoch = 5;  // |E| collected per outer epoch
  int imaginary_episodes = 40;      // rollouts per inner pass
  double real_mix_fraction = 0.05;  // first-pass share of real episodes
  double pr_threshold = 0.66;
  int pr_episodes = 5;      // model rollouts per member when scoring PR
  int max_inner_passes = 12;  // safety cap on the PR-gated while-loop
  long total_interactions = 450000;

  void validate(int env_horizon) const {
    if (!(model_horizon > 0 && model_horizon < env_horizon))
      throw std::invalid_argument("MbppoConfig: need 0 < H < T");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("MbppoConfig: beta outside [0, 1]");
    if (!(pr_threshold > 0.0 && pr_threshold <= 1.0))
      throw std::invalid_argument("MbppoConfig: PR threshold outside (0, 1]");
    if (!(real_mix_fraction >= 0.0 && real_mix_fraction <= 1.0))
      throw std::invalid_argument("MbppoConfig: real mix fraction outside [0, 1]");
    if (real_episodes_per_epoch < 1 || imaginary_episodes < 1 || max_inner_passes < 1)
      throw std::invalid_argument("MbppoConfig: episode counts must be positive");
    model.validate();
  }
};

/// H-step rollouts inside the ensemble: actions from the live policy, next
/// states from a per-step random elite member, rewards and costs from the
/// environment's analytic signal functions. The model has no terminal
/// predicate, so every episode is exactly H steps.
inline std::vector<env::Episode> imaginary_rollout(const model::DynamicsEnsemble& ensemble,
                                                   const env::Env& e, const GaussianPolicy& policy,
                                                   const std::vector<Vec>& initial_states, int h,
                                                   Rng& rng) {
  if (h < 1) throw std::invalid_argument("imaginary_rollout: horizon must be positive");
  std::vector<env::Episode> out;
  out.reserve(initial_states.size());
  for (const Vec& s0 : initial_states) {
    env::Episode ep;
    ep.source = env::Episode::Source::Imaginary;
    ep.terminal = false;
    Vec s = s0;
    ep.states.push_back(s);
    for (int t = 0; t < h; ++t) {
      auto [a, logp] = policy.sample(s, rng);
      Vec s2 = model::sample_next(ensemble, s, a, rng);
      ep.actions.push_back(a);
      ep.logps.push_back(logp);
      ep.rewards.push_back(e.reward_from(s, a, s2));
      ep.costs.push_back(e.cost_from(s, a, s2));
      ep.states.push_back(s2);
      s = s2;
    }
    out.push_back(std::move(ep));
  }
  return out;
}

/// J^C_sample: average discounted cost return over the batch's episodes,
/// truncated to the first H steps (rollout-local time, gamma^0 at step one).
inline double estimate_sample_cost(const std::vector<env::Episode>& episodes, double gamma,
                                   int h) {
  if (episodes.empty()) throw std::invalid_argument("estimate_sample_cost: empty batch");
  double acc = 0.0;
  for (const auto& ep : episodes) {
    double g = 1.0;
    const int n = std::min(h, ep.length());
    for (int t = 0; t < n; ++t) {
      acc += g * ep.costs[t];
      g *= gamma;
    }
  }
  return acc / static_cast<double>(episodes.size());
}

/// First-pass batch composition: keeps all imaginary episodes and prepends
/// real episodes in the requested episode-count proportion, truncated to
/// H-step prefixes so both sources share horizon semantics. Provenance tags
/// are preserved.
inline std::vector<env::Episode> mix_first_pass(const std::vector<env::Episode>& real,
                                                std::vector<env::Episode> imaginary,
                                                double real_fraction, int h) {
  if (real_fraction < 0.0 || real_fraction > 1.0)
    throw std::invalid_argument("mix_first_pass: fraction outside [0, 1]");
  std::size_t want_real;
  if (real_fraction >= 1.0) {
    want_real = real.size();
    imaginary.clear();
  } else {
    want_real = static_cast<std::size_t>(
        std::lround(static_cast<double>(imaginary.size()) * real_fraction / (1.0 - real_fraction)));
    want_real = std::min(want_real, real.size());
  }
  std::vector<env::Episode> out;
  out.reserve(want_real + imaginary.size());
  for (std::size_t i = 0; i < want_real; ++i) {
    env::Episode ep = real[i];
    if (ep.length() > h) {
      ep.states.resize(h + 1);
      ep.actions.resize(h);
      ep.rewards.resize(h);
      ep.costs.resize(h);
      ep.logps.resize(h);
      ep.terminal = false;  // cut, not terminated
    }
    out.push_back(std::move(ep));
  }
  for (auto& ep : imaginary) out.push_back(std::move(ep));
  return out;
}

/// Everything a run mutates; exposed so checkpoints can capture it and a run
/// can resume bit-exactly.
struct MbppoState {
  Agent agent;
  model::DynamicsEnsemble ensemble;
  model::TransitionDataset dataset;
  Rng collect_rng{0};
  Rng update_rng{0};
  Rng model_rng{0};
  Rng rollout_rng{0};
  Rng pr_rng{0};
  long interactions = 0;
  long cumulative_violations = 0;
  int epoch = 0;
};

inline MbppoState mbppo_init(const env::Env& e, const MbppoConfig& cfg, std::uint64_t seed) {
  cfg.validate(e.horizon());
  MbppoState st;
  Rng init_rng(Rng::derive(seed, 11));
  LagrangeState lag;
  lag.lambda = cfg.lambda_init;
  lag.d = cfg.d;
  lag.beta = cfg.beta;
  lag.lr = cfg.lambda_lr;
  lag.lr_decay = cfg.lambda_lr_decay;
  st.agent = make_agent(e.obs_dim(), e.action_dim(), cfg.actor_hidden, cfg.critic_hidden, cfg.ppo,
                        lag, init_rng, cfg.init_log_std);
  Rng model_init(Rng::derive(seed, 12));
  st.ensemble = model::make_ensemble(e.obs_dim(), e.action_dim(), cfg.model, model_init);
  st.collect_rng = Rng(Rng::derive(seed, 13));
  st.update_rng = Rng(Rng::derive(seed, 14));
  st.model_rng = Rng(Rng::derive(seed, 15));
  st.rollout_rng = Rng(Rng::derive(seed, 16));
  st.pr_rng = Rng(Rng::derive(seed, 17));
  return st;
}

/// The model-based training loop: collect real data, retrain the ensemble,
/// then a PR-gated inner loop of imaginary-batch PPO updates with
/// beta-tightened multiplier ascent on J^C_sample. Real interactions are
/// counted only in the collection step; the ensemble is frozen inside the
/// inner loop; lambda persists across model retrainings.
inline RunResult run_mbppo(env::Env& e, const MbppoConfig& cfg, MbppoState& st,
                           const std::function<void(const TrainLogRow&)>& on_row = {},
                           const std::function<void(const MbppoState&)>& on_epoch_end = {}) {
  cfg.validate(e.horizon());
  RunResult result;
  result.interactions = st.interactions;
  BatchOptions opt;
  opt.gamma = cfg.ppo.gamma;
  opt.gae_lambda = cfg.ppo.gae_lambda;
  opt.normalize_reward_adv = cfg.ppo.normalize_reward_adv;

  try {
    while (st.interactions < cfg.total_interactions) {
      CollectResult col = collect_real(e, st.agent.policy, e.horizon(),
                                       cfg.real_episodes_per_epoch, cfg.ppo.gamma, st.collect_rng);
      st.interactions += col.steps;
      st.cumulative_violations += col.violations;
      model::append_dataset(st.dataset, model::make_dataset(col.episodes, e.obs_dim(), e.action_dim()));

      train_ensemble(st.ensemble, st.dataset, cfg.model, st.model_rng);

      TrainLogRow row;
      row.epoch = st.epoch;
      row.inner_pass = 0;
      row.interactions = st.interactions;
      row.reward_return = col.mean_reward_return;
      row.cost_return = col.mean_cost_return;
      row.reward_sum = col.mean_reward_sum;
      row.cost_sum = col.mean_cost_sum;
      row.lambda = st.agent.lagrange.lambda;
      row.violations = col.violations;
      row.cumulative_violations = st.cumulative_violations;
      result.rows.push_back(row);
      if (on_row) on_row(row);

      for (int pass = 1; pass <= cfg.max_inner_passes; ++pass) {
        std::vector<Vec> starts;
        starts.reserve(cfg.imaginary_episodes);
        for (int i = 0; i < cfg.imaginary_episodes; ++i)
          starts.push_back(e.sample_initial(st.rollout_rng));
        std::vector<env::Episode> imag = imaginary_rollout(st.ensemble, e, st.agent.policy, starts,
                                                           cfg.model_horizon, st.rollout_rng);
        std::vector<env::Episode> batch_eps =
            pass == 1 ? mix_first_pass(col.episodes, std::move(imag), cfg.real_mix_fraction,
                                       cfg.model_horizon)
                      : std::move(imag);

        const double j_sample = estimate_sample_cost(batch_eps, cfg.ppo.gamma, cfg.model_horizon);
        st.agent.lagrange = update_lambda(st.agent.lagrange, j_sample);

        RolloutBatch batch = assemble_batch(batch_eps, st.agent.critics, opt);
        GaussianPolicy policy_before = st.agent.policy;
        ppo_update(st.agent, batch, cfg.ppo, st.update_rng);

        const double pr =
            model::performance_ratio(st.ensemble, e, st.agent.policy, policy_before, cfg.ppo.gamma,
                                     e.horizon(), cfg.pr_episodes, st.pr_rng);

        TrainLogRow inner;
        inner.epoch = st.epoch;
        inner.inner_pass = pass;
        inner.interactions = st.interactions;  // imaginary steps never advance the counter
        double rr = 0.0, cr = 0.0, rs = 0.0, cs = 0.0;
        for (const auto& ep : batch_eps) {
          rr += env::episode_return(ep, cfg.ppo.gamma, env::Channel::Reward);
          cr += env::episode_return(ep, cfg.ppo.gamma, env::Channel::Cost);
          rs += env::undiscounted_sum(ep, env::Channel::Reward);
          cs += env::undiscounted_sum(ep, env::Channel::Cost);
        }
        const double ne = static_cast<double>(batch_eps.size());
        inner.reward_return = rr / ne;
        inner.cost_return = cr / ne;
        inner.reward_sum = rs / ne;
        inner.cost_sum = cs / ne;
        inner.lambda = st.agent.lagrange.lambda;
        inner.violations = 0;
        inner.cumulative_violations = st.cumulative_violations;
        inner.pr = pr;
        result.rows.push_back(inner);
        if (on_row) on_row(inner);

        if (pr <= cfg.pr_threshold) break;  // retrain the model on fresh data
      }

      ++st.epoch;
      if (on_epoch_end) on_epoch_end(st);
    }
  } catch (const std::runtime_error& err) {
    std::ostringstream os;
    os << "model-based training aborted at epoch " << st.epoch << " (lambda "
       << st.agent.lagrange.lambda << ", interactions " << st.interactions << "): " << err.what();
    result.aborted = true;
    result.abort_reason = os.str();
    throw TrainingError(os.str());
  }
  result.interactions = st.interactions;
  return result;
}

inline RunResult run_mbppo(env::Env& e, const MbppoConfig& cfg, std::uint64_t seed,
                           MbppoState* state_out = nullptr,
                           const std::function<void(const TrainLogRow&)>& on_row = {},
                           const std::function<void(const MbppoState&)>& on_epoch_end = {}) {
  MbppoState st = mbppo_init(e, cfg, seed);
  RunResult res = run_mbppo(e, cfg, st, on_row, on_epoch_end);
  if (state_out) *state_out = st;
  return res;
}

}  // namespace saferl::rl
