#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>

#include "saferl/exp/checkpoint.hpp"
#include "saferl/exp/config.hpp"
#include "saferl/exp/metrics.hpp"
#include "saferl/exp/runlog.hpp"

namespace saferl::exp {

namespace fs = std::filesystem;

struct SeedSummary {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_reward = 0.0;  // mean reward return over the last 10 collection rows
  double final_cost = 0.0;    // same for the cost channel
  bool feasible = false;      // final_cost <= d
  long cumulative_violations = 0;
  long interactions = 0;
  long convergence_epoch = 0;
  int epochs = 0;
};

inline nlohmann::json to_json(const SeedSummary& s) {
  return {{"seed", s.seed},
          {"ok", s.ok},
          {"error", s.error},
          {"final_reward_return", s.final_reward},
          {"final_cost_return", s.final_cost},
          {"feasible", s.feasible},
          {"cumulative_violations", s.cumulative_violations},
          {"interactions", s.interactions},
          {"convergence_epoch", s.convergence_epoch},
          {"epochs", s.epochs}};
}

/// Final 10-collection-row means and the feasibility flag.
inline SeedSummary summarize_rows(const std::vector<rl::TrainLogRow>& rows, double d) {
  SeedSummary s;
  std::vector<double> rewards, costs;
  long cumulative = 0;
  int epochs = 0;
  for (const auto& r : rows) {
    if (r.inner_pass != 0) continue;
    rewards.push_back(r.reward_return);
    costs.push_back(r.cost_return);
    cumulative = r.cumulative_violations;
    epochs = r.epoch + 1;
    s.interactions = r.interactions;
  }
  if (rewards.empty()) throw std::invalid_argument("summarize_rows: no collection rows");
  const std::size_t tail = std::min<std::size_t>(10, rewards.size());
  double fr = 0.0, fc = 0.0;
  for (std::size_t i = rewards.size() - tail; i < rewards.size(); ++i) {
    fr += rewards[i];
    fc += costs[i];
  }
  s.final_reward = fr / tail;
  s.final_cost = fc / tail;
  s.feasible = s.final_cost <= d;
  s.cumulative_violations = cumulative;
  s.convergence_epoch = static_cast<long>(convergence_index(rewards));
  s.epochs = epochs;
  s.ok = true;
  return s;
}

struct ExperimentResult {
  std::vector<SeedSummary> seeds;
  bool all_ok = true;
  std::string dir;
};

inline std::string seed_dir(const std::string& out_dir, std::uint64_t seed) {
  return out_dir + "/seed_" + std::to_string(seed);
}

/// Runs every configured seed sequentially, writing per-seed artifacts
/// (runlog.csv, config.json, summary.json, checkpoint.json, timing.json) and
/// a top-level aggregate.json. A failing seed keeps its partial artifacts and
/// a failure record; remaining seeds still run.
inline ExperimentResult run_experiment(const RunConfig& cfg) {
  ExperimentResult result;
  result.dir = cfg.out_dir;
  fs::create_directories(cfg.out_dir);

  for (std::uint64_t seed : cfg.seeds) {
    const std::string dir = seed_dir(cfg.out_dir, seed);
    fs::create_directories(dir);
    {
      nlohmann::json snapshot = config_to_json(cfg);
      snapshot["seed"] = seed;
      snapshot["schema"] = kRunLogSchema;
      snapshot["parameter_init"] = "fan_in_uniform";
      nn::save_json(snapshot, dir + "/config.json");
    }

    SeedSummary summary;
    summary.seed = seed;
    const auto wall_start = std::chrono::steady_clock::now();
    try {
      auto e = make_env(cfg, seed);
      RunLogWriter writer(dir + "/runlog.csv");
      std::vector<rl::TrainLogRow> rows;
      auto on_row = [&](const rl::TrainLogRow& r) {
        writer.write(r);
        rows.push_back(r);
      };

      if (cfg.agent == AgentKind::MbppoLagrangian) {
        rl::MbppoConfig mcfg = mbppo_config(cfg);
        rl::MbppoState st = rl::mbppo_init(*e, mcfg, seed);
        auto on_epoch = [&](const rl::MbppoState& state) {
          nn::save_json(to_json(state), dir + "/checkpoint.json");
        };
        rl::run_mbppo(*e, mcfg, st, on_row, on_epoch);
      } else {
        rl::ModelFreeConfig mcfg = model_free_config(cfg);
        rl::Agent agent;
        rl::train_model_free(*e, mcfg, seed, &agent, on_row);
        nlohmann::json ck;
        ck["format"] = 1;
        ck["agent"] = to_json(agent);
        nn::save_json(ck, dir + "/checkpoint.json");
      }

      summary = summarize_rows(rows, cfg.d);
      summary.seed = seed;
    } catch (const std::exception& err) {
      summary.ok = false;
      summary.error = err.what();
      result.all_ok = false;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    // wall-clock lives in a sidecar so the deterministic artifacts stay
    // byte-identical across reruns
    nn::save_json(nlohmann::json{{"wall_seconds", wall}}, dir + "/timing.json");
    nn::save_json(to_json(summary), dir + "/summary.json");
    result.seeds.push_back(summary);
  }

  // top-level aggregate
  nlohmann::json agg;
  agg["schema"] = kRunLogSchema;
  agg["agent"] = to_string(cfg.agent);
  agg["env"] = to_string(cfg.env);
  agg["per_seed"] = nlohmann::json::array();
  std::vector<double> rewards, costs, violations;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& s : result.seeds) {
    agg["per_seed"].push_back(to_json(s));
    if (s.ok) {
      rewards.push_back(s.final_reward);
      costs.push_back(s.final_cost);
      violations.push_back(static_cast<double>(s.cumulative_violations));
    } else {
      failures.push_back({{"seed", s.seed}, {"error", s.error}});
    }
  }
  if (!rewards.empty()) {
    agg["mean"] = {{"final_reward_return", mean(rewards)},
                   {"final_cost_return", mean(costs)},
                   {"cumulative_violations", mean(violations)}};
    agg["median"] = {{"final_reward_return", median(rewards)},
                     {"final_cost_return", median(costs)},
                     {"cumulative_violations", median(violations)}};
  }
  agg["failures"] = failures;
  nn::save_json(agg, cfg.out_dir + "/aggregate.json");
  return result;
}

/// Rebuilds aggregate.json by re-reading the per-seed summaries in dir.
inline nlohmann::json aggregate_dir(const std::string& dir) {
  nlohmann::json agg;
  agg["schema"] = kRunLogSchema;
  agg["per_seed"] = nlohmann::json::array();
  std::vector<double> rewards, costs, violations;
  std::vector<fs::path> seed_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0)
      seed_dirs.push_back(entry.path());
  std::sort(seed_dirs.begin(), seed_dirs.end());
  if (seed_dirs.empty()) throw std::runtime_error("aggregate: no seed_* directories under " + dir);
  for (const auto& p : seed_dirs) {
    nlohmann::json s = nn::load_json((p / "summary.json").string());
    agg["per_seed"].push_back(s);
    if (s.value("ok", false)) {
      rewards.push_back(s.at("final_reward_return").get<double>());
      costs.push_back(s.at("final_cost_return").get<double>());
      violations.push_back(s.at("cumulative_violations").get<double>());
    }
  }
  if (!rewards.empty()) {
    agg["mean"] = {{"final_reward_return", mean(rewards)},
                   {"final_cost_return", mean(costs)},
                   {"cumulative_violations", mean(violations)}};
    agg["median"] = {{"final_reward_return", median(rewards)},
                     {"final_cost_return", median(costs)},
                     {"cumulative_violations", median(violations)}};
  }
  nn::save_json(agg, dir + "/aggregate.json");
  return agg;
}

/// Normalizes a run directory's violation and reward metrics against an
/// unconstrained-baseline directory (metric / baseline-mean). Emits
/// normalized.json in dir plus a per-seed normalized violations series next
/// to each runlog. Baseline provenance is recorded in the output.
inline nlohmann::json baseline_normalize(const std::string& dir, const std::string& baseline_dir) {
  nlohmann::json base = nn::load_json(baseline_dir + "/aggregate.json");
  if (!base.contains("mean"))
    throw std::runtime_error("baseline-normalize: " + baseline_dir +
                             "/aggregate.json has no mean block (no successful seeds)");
  const double base_violations = base.at("mean").at("cumulative_violations").get<double>();
  const double base_reward = base.at("mean").at("final_reward_return").get<double>();

  nlohmann::json out;
  out["schema"] = kRunLogSchema;
  out["baseline_dir"] = baseline_dir;
  out["baseline_cumulative_violations"] = base_violations;
  out["baseline_final_reward_return"] = base_reward;
  out["per_seed"] = nlohmann::json::array();

  std::vector<fs::path> seed_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0)
      seed_dirs.push_back(entry.path());
  std::sort(seed_dirs.begin(), seed_dirs.end());
  if (seed_dirs.empty())
    throw std::runtime_error("baseline-normalize: no seed_* directories under " + dir);

  for (const auto& p : seed_dirs) {
    auto rows = read_runlog((p / "runlog.csv").string());
    auto cv = cumulative_violations(rows);
    std::vector<double> cv_d(cv.begin(), cv.end());
    auto normalized = normalize_against_baseline(
        cv_d, base_violations, baseline_dir + " cumulative violations");
    {
      std::ofstream f(p / "normalized_violations.csv", std::ios::trunc);
      f << "epoch,interactions,normalized_cumulative_violations\n";
      std::size_t k = 0;
      for (const auto& r : rows) {
        if (r.inner_pass != 0) continue;
        f << r.epoch << ',' << r.interactions << ',' << format_double(normalized[k]) << '\n';
        ++k;
      }
    }
    nlohmann::json s = nn::load_json((p / "summary.json").string());
    nlohmann::json entry;
    entry["seed"] = s.at("seed");
    entry["normalized_cumulative_violations"] = normalized.empty() ? 0.0 : normalized.back();
    if (s.value("ok", false) && base_reward > 0.0)
      entry["normalized_final_reward_return"] =
          s.at("final_reward_return").get<double>() / base_reward;
    out["per_seed"].push_back(entry);
  }
  nn::save_json(out, dir + "/normalized.json");
  return out;
}

}  // namespace saferl::exp
