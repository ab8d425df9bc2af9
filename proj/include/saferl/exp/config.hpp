#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "saferl/env/circle_track.hpp"
#include "saferl/env/discrete.hpp"
#include "saferl/env/hazard_goal.hpp"
#include "saferl/rl/mbppo.hpp"
#include "saferl/rl/ppo_lagrangian.hpp"

namespace saferl::exp {

enum class AgentKind { Ppo, PpoLagrangian, MbppoLagrangian };
enum class EnvKind { HazardGoal, CircleTrack, Chain };

inline std::string to_string(AgentKind a) {
  switch (a) {
    case AgentKind::Ppo: return "ppo";
    case AgentKind::PpoLagrangian: return "ppo_lagrangian";
    case AgentKind::MbppoLagrangian: return "mbppo_lagrangian";
  }
  return "?";
}

inline std::string to_string(EnvKind e) {
  switch (e) {
    case EnvKind::HazardGoal: return "hazard_goal";
    case EnvKind::CircleTrack: return "circle_track";
    case EnvKind::Chain: return "chain";
  }
  return "?";
}

/// Full experiment description. Every field has a default; parsing rejects
/// unknown keys at every nesting level so typos fail loudly instead of being
/// silently ignored.
struct RunConfig {
  AgentKind agent = AgentKind::PpoLagrangian;
  EnvKind env = EnvKind::HazardGoal;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  long total_interactions = 100000;
  std::string out_dir = "runs/out";

  // environment parameters (the relevant subset applies per env kind)
  env::HazardGoalConfig hazard;
  env::CircleTrackConfig circle;
  double chain_gamma = 0.9;
  int chain_horizon = 50;
  // < 0 means "derive the layout from the run seed"
  long layout_seed = -1;

  rl::PpoConfig ppo;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double init_log_std = -0.5108256237659907;  // ln 0.6
  int episodes_per_epoch = 5;

  double d = 18.0;
  std::optional<double> beta;  // default depends on the agent (1 model-free, 0.02 model-based)
  double lambda_init = 1.0;
  double lambda_lr = 5e-2;
  double lambda_lr_decay = 0.0;

  model::EnsembleConfig model;
  int model_horizon = 80;
  int imaginary_episodes = 40;
  double real_mix_fraction = 0.05;
  double pr_threshold = 0.66;
  int pr_episodes = 5;
  int max_inner_passes = 12;

  double effective_beta() const {
    if (beta) return *beta;
    return agent == AgentKind::MbppoLagrangian ? 0.02 : 1.0;
  }

  int env_horizon() const {
    switch (env) {
      case EnvKind::HazardGoal: return hazard.horizon;
      case EnvKind::CircleTrack: return circle.horizon;
      case EnvKind::Chain: return chain_horizon;
    }
    return 0;
  }
};

namespace detail {

inline void expect_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                        const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in " + where);
  }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline AgentKind agent_from_string(const std::string& s) {
  if (s == "ppo") return AgentKind::Ppo;
  if (s == "ppo_lagrangian") return AgentKind::PpoLagrangian;
  if (s == "mbppo_lagrangian") return AgentKind::MbppoLagrangian;
  throw std::invalid_argument("config: unknown agent \"" + s + "\"");
}

inline EnvKind env_from_string(const std::string& s) {
  if (s == "hazard_goal") return EnvKind::HazardGoal;
  if (s == "circle_track") return EnvKind::CircleTrack;
  if (s == "chain") return EnvKind::Chain;
  throw std::invalid_argument("config: unknown env \"" + s + "\"");
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::expect_keys;
  using detail::maybe;
  RunConfig c;
  expect_keys(j,
              {"agent", "env", "seeds", "total_interactions", "out_dir", "env_params", "ppo",
               "lagrange", "model", "mbppo"},
              "top level");
  if (j.contains("agent")) c.agent = agent_from_string(j.at("agent").get<std::string>());
  if (j.contains("env")) c.env = env_from_string(j.at("env").get<std::string>());
  maybe(j, "seeds", c.seeds);
  maybe(j, "total_interactions", c.total_interactions);
  maybe(j, "out_dir", c.out_dir);

  if (j.contains("env_params")) {
    const auto& e = j.at("env_params");
    expect_keys(e,
                {"horizon", "layout_seed", "num_hazards", "hazard_radius", "goal_radius",
                 "arena_half", "dt", "lidar_bins", "lidar_range", "progress_gain", "goal_bonus",
                 "radius", "target_speed", "annulus_inner", "annulus_outer", "radial_sharpness",
                 "gamma"},
                "env_params");
    maybe(e, "layout_seed", c.layout_seed);
    if (e.contains("horizon")) {
      const int h = e.at("horizon").get<int>();
      c.hazard.horizon = h;
      c.circle.horizon = h;
      c.chain_horizon = h;
    }
    maybe(e, "num_hazards", c.hazard.num_hazards);
    maybe(e, "hazard_radius", c.hazard.hazard_radius);
    maybe(e, "goal_radius", c.hazard.goal_radius);
    maybe(e, "arena_half", c.hazard.arena_half);
    if (e.contains("dt")) {
      c.hazard.dt = e.at("dt").get<double>();
      c.circle.dt = c.hazard.dt;
    }
    maybe(e, "lidar_bins", c.hazard.lidar_bins);
    maybe(e, "lidar_range", c.hazard.lidar_range);
    maybe(e, "progress_gain", c.hazard.progress_gain);
    maybe(e, "goal_bonus", c.hazard.goal_bonus);
    maybe(e, "radius", c.circle.radius);
    maybe(e, "target_speed", c.circle.target_speed);
    maybe(e, "annulus_inner", c.circle.annulus_inner);
    maybe(e, "annulus_outer", c.circle.annulus_outer);
    maybe(e, "radial_sharpness", c.circle.radial_sharpness);
    maybe(e, "gamma", c.chain_gamma);
  }

  if (j.contains("ppo")) {
    const auto& p = j.at("ppo");
    expect_keys(p,
                {"gamma", "gae_lambda", "clip_eps", "actor_lr", "critic_lr", "update_epochs",
                 "minibatch", "normalize_reward_adv", "lagrangian_loss_norm", "actor_hidden",
                 "critic_hidden", "init_log_std", "episodes_per_epoch"},
                "ppo");
    maybe(p, "gamma", c.ppo.gamma);
    maybe(p, "gae_lambda", c.ppo.gae_lambda);
    maybe(p, "clip_eps", c.ppo.clip_eps);
    maybe(p, "actor_lr", c.ppo.actor_lr);
    maybe(p, "critic_lr", c.ppo.critic_lr);
    maybe(p, "update_epochs", c.ppo.update_epochs);
    maybe(p, "minibatch", c.ppo.minibatch);
    maybe(p, "normalize_reward_adv", c.ppo.normalize_reward_adv);
    maybe(p, "lagrangian_loss_norm", c.ppo.lagrangian_loss_norm);
    maybe(p, "actor_hidden", c.actor_hidden);
    maybe(p, "critic_hidden", c.critic_hidden);
    maybe(p, "init_log_std", c.init_log_std);
    maybe(p, "episodes_per_epoch", c.episodes_per_epoch);
  }

  if (j.contains("lagrange")) {
    const auto& l = j.at("lagrange");
    expect_keys(l, {"d", "beta", "lambda_init", "lambda_lr", "lambda_lr_decay"}, "lagrange");
    maybe(l, "d", c.d);
    if (l.contains("beta")) c.beta = l.at("beta").get<double>();
    maybe(l, "lambda_init", c.lambda_init);
    maybe(l, "lambda_lr", c.lambda_lr);
    maybe(l, "lambda_lr_decay", c.lambda_lr_decay);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    expect_keys(m,
                {"members", "elites", "hidden", "lr", "minibatch", "max_epochs", "patience",
                 "val_fraction", "bootstrap"},
                "model");
    maybe(m, "members", c.model.members);
    maybe(m, "elites", c.model.elites);
    maybe(m, "hidden", c.model.hidden);
    maybe(m, "lr", c.model.lr);
    maybe(m, "minibatch", c.model.minibatch);
    maybe(m, "max_epochs", c.model.max_epochs);
    maybe(m, "patience", c.model.patience);
    maybe(m, "val_fraction", c.model.val_fraction);
    maybe(m, "bootstrap", c.model.bootstrap);
  }

  if (j.contains("mbppo")) {
    const auto& m = j.at("mbppo");
    expect_keys(m,
                {"model_horizon", "imaginary_episodes", "real_mix_fraction", "pr_threshold",
                 "pr_episodes", "max_inner_passes"},
                "mbppo");
    maybe(m, "model_horizon", c.model_horizon);
    maybe(m, "imaginary_episodes", c.imaginary_episodes);
    maybe(m, "real_mix_fraction", c.real_mix_fraction);
    maybe(m, "pr_threshold", c.pr_threshold);
    maybe(m, "pr_episodes", c.pr_episodes);
    maybe(m, "max_inner_passes", c.max_inner_passes);
  }
  return c;
}

/// Snapshot of the fully-resolved configuration (defaults filled in), as
/// written next to each run for reproducibility.
inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["agent"] = to_string(c.agent);
  j["env"] = to_string(c.env);
  j["seeds"] = c.seeds;
  j["total_interactions"] = c.total_interactions;
  j["out_dir"] = c.out_dir;
  j["env_params"] = {{"horizon", c.env_horizon()},
                     {"layout_seed", c.layout_seed},
                     {"num_hazards", c.hazard.num_hazards},
                     {"hazard_radius", c.hazard.hazard_radius},
                     {"goal_radius", c.hazard.goal_radius},
                     {"arena_half", c.hazard.arena_half},
                     {"dt", c.hazard.dt},
                     {"lidar_bins", c.hazard.lidar_bins},
                     {"lidar_range", c.hazard.lidar_range},
                     {"progress_gain", c.hazard.progress_gain},
                     {"goal_bonus", c.hazard.goal_bonus},
                     {"radius", c.circle.radius},
                     {"target_speed", c.circle.target_speed},
                     {"annulus_inner", c.circle.annulus_inner},
                     {"annulus_outer", c.circle.annulus_outer},
                     {"radial_sharpness", c.circle.radial_sharpness},
                     {"gamma", c.chain_gamma}};
  j["ppo"] = {{"gamma", c.ppo.gamma},
              {"gae_lambda", c.ppo.gae_lambda},
              {"clip_eps", c.ppo.clip_eps},
              {"actor_lr", c.ppo.actor_lr},
              {"critic_lr", c.ppo.critic_lr},
              {"update_epochs", c.ppo.update_epochs},
              {"minibatch", c.ppo.minibatch},
              {"normalize_reward_adv", c.ppo.normalize_reward_adv},
              {"lagrangian_loss_norm", c.ppo.lagrangian_loss_norm},
              {"actor_hidden", c.actor_hidden},
              {"critic_hidden", c.critic_hidden},
              {"init_log_std", c.init_log_std},
              {"episodes_per_epoch", c.episodes_per_epoch}};
  j["lagrange"] = {{"d", c.d},
                   {"beta", c.effective_beta()},
                   {"lambda_init", c.lambda_init},
                   {"lambda_lr", c.lambda_lr},
                   {"lambda_lr_decay", c.lambda_lr_decay}};
  j["model"] = {{"members", c.model.members},   {"elites", c.model.elites},
                {"hidden", c.model.hidden},     {"lr", c.model.lr},
                {"minibatch", c.model.minibatch}, {"max_epochs", c.model.max_epochs},
                {"patience", c.model.patience},  {"val_fraction", c.model.val_fraction},
                {"bootstrap", c.model.bootstrap}};
  j["mbppo"] = {{"model_horizon", c.model_horizon},
                {"imaginary_episodes", c.imaginary_episodes},
                {"real_mix_fraction", c.real_mix_fraction},
                {"pr_threshold", c.pr_threshold},
                {"pr_episodes", c.pr_episodes},
                {"max_inner_passes", c.max_inner_passes}};
  return j;
}

/// Instantiates the configured environment. Layouts are reproducible from
/// (env name, seed): with layout_seed < 0 the run seed fixes the layout.
inline std::unique_ptr<env::Env> make_env(const RunConfig& c, std::uint64_t run_seed) {
  const std::uint64_t layout =
      c.layout_seed >= 0 ? static_cast<std::uint64_t>(c.layout_seed) : run_seed;
  switch (c.env) {
    case EnvKind::HazardGoal:
      return std::make_unique<env::HazardGoalEnv>(c.hazard, layout);
    case EnvKind::CircleTrack:
      return std::make_unique<env::CircleTrackEnv>(c.circle, layout);
    case EnvKind::Chain:
      return std::make_unique<env::DiscreteEnvAdapter>(env::make_risky_chain(c.chain_gamma),
                                                       c.chain_horizon);
  }
  throw std::logic_error("make_env: unhandled env kind");
}

inline rl::ModelFreeConfig model_free_config(const RunConfig& c) {
  rl::ModelFreeConfig m;
  m.ppo = c.ppo;
  m.actor_hidden = c.actor_hidden;
  m.critic_hidden = c.critic_hidden;
  m.init_log_std = c.init_log_std;
  m.d = c.d;
  m.beta = c.effective_beta();
  m.lambda_init = c.agent == AgentKind::Ppo ? 0.0 : c.lambda_init;
  m.lambda_lr = c.lambda_lr;
  m.lambda_lr_decay = c.lambda_lr_decay;
  m.lambda_frozen = c.agent == AgentKind::Ppo;
  m.episodes_per_epoch = c.episodes_per_epoch;
  m.total_interactions = c.total_interactions;
  return m;
}

inline rl::MbppoConfig mbppo_config(const RunConfig& c) {
  rl::MbppoConfig m;
  m.ppo = c.ppo;
  m.model = c.model;
  m.actor_hidden = c.actor_hidden;
  m.critic_hidden = c.critic_hidden;
  m.init_log_std = c.init_log_std;
  m.d = c.d;
  m.beta = c.effective_beta();
  m.lambda_init = c.lambda_init;
  m.lambda_lr = c.lambda_lr;
  m.lambda_lr_decay = c.lambda_lr_decay;
  m.model_horizon = c.model_horizon;
  m.real_episodes_per_epoch = c.episodes_per_epoch;
  m.imaginary_episodes = c.imaginary_episodes;
  m.real_mix_fraction = c.real_mix_fraction;
  m.pr_threshold = c.pr_threshold;
  m.pr_episodes = c.pr_episodes;
  m.max_inner_passes = c.max_inner_passes;
  m.total_interactions = c.total_interactions;
  return m;
}

}  // namespace saferl::exp
