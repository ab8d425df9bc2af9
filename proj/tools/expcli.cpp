// Experiment runner for the constrained-RL engine: seeded multi-run training
// for ppo / ppo_lagrangian / mbppo_lagrangian agents, aggregation, and
// baseline normalization of the resulting metrics.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "saferl/exp/experiment.hpp"

using namespace saferl;

int main(int argc, char** argv) {
  CLI::App app{"saferl experiment runner"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  std::string agent_override, env_override, out_override;
  std::vector<std::uint64_t> seed_override;
  auto* run = app.add_subcommand("run", "train one agent across seeds from a config file");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--seed", seed_override, "run only these seeds (overrides the file)");
  run->add_option("--agent", agent_override, "agent kind override (ppo, ppo_lagrangian, mbppo_lagrangian)");
  run->add_option("--env", env_override, "environment override (hazard_goal, circle_track, chain)");
  run->add_option("--out", out_override, "output directory override");

  // aggregate
  std::string agg_dir;
  auto* agg = app.add_subcommand("aggregate", "rebuild aggregate.json from per-seed summaries");
  agg->add_option("--dir", agg_dir, "experiment directory")->required();

  // baseline-normalize
  std::string norm_dir, baseline_dir;
  auto* norm = app.add_subcommand("baseline-normalize",
                                  "normalize metrics against an unconstrained baseline run");
  norm->add_option("--dir", norm_dir, "experiment directory to normalize")->required();
  norm->add_option("--baseline-dir", baseline_dir, "completed unconstrained-PPO run directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      exp::RunConfig cfg = exp::config_from_json(nn::load_json(config_path));
      if (!agent_override.empty()) cfg.agent = exp::agent_from_string(agent_override);
      if (!env_override.empty()) cfg.env = exp::env_from_string(env_override);
      if (!out_override.empty()) cfg.out_dir = out_override;
      if (!seed_override.empty()) cfg.seeds = seed_override;
      exp::ExperimentResult res = exp::run_experiment(cfg);
      for (const auto& s : res.seeds) {
        if (s.ok) {
          std::printf("seed %llu: reward %.4f cost %.4f %s violations %ld interactions %ld\n",
                      static_cast<unsigned long long>(s.seed), s.final_reward, s.final_cost,
                      s.feasible ? "feasible" : "INFEASIBLE", s.cumulative_violations,
                      s.interactions);
        } else {
          std::printf("seed %llu: FAILED (%s)\n", static_cast<unsigned long long>(s.seed),
                      s.error.c_str());
        }
      }
      std::printf("artifacts: %s\n", res.dir.c_str());
      return res.all_ok ? 0 : 1;
    }
    if (agg->parsed()) {
      exp::aggregate_dir(agg_dir);
      std::printf("wrote %s/aggregate.json\n", agg_dir.c_str());
      return 0;
    }
    if (norm->parsed()) {
      exp::baseline_normalize(norm_dir, baseline_dir);
      std::printf("wrote %s/normalized.json\n", norm_dir.c_str());
      return 0;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
