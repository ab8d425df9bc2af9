#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "saferl/env/env.hpp"

namespace saferl::env {

struct HazardGoalConfig {
  double arena_half = 2.0;     // square arena [-arena_half, arena_half]^2
  int num_hazards = 12;        // circular hazard regions
  double hazard_radius = 0.3;
  double goal_radius = 0.3;
  double dt = 0.1;             // velocity command integration step
  int horizon = 200;
  int lidar_bins = 8;
  double lidar_range = 2.0;
  double progress_gain = 1.0;  // reward per unit of distance-to-goal reduction
  double goal_bonus = 3.0;
};

/// 2-D velocity-controlled point navigation with circular hazards and a goal
/// disc. Cost is the hazard indicator (1 inside any hazard), reward is shaped
/// progress toward the goal plus a terminal bonus. The observation is fully
/// sufficient for the signal functions: position, goal-relative vector, and a
/// pseudo-lidar of hazard closeness per angular bin.
///
/// The layout (goal and hazard placement) is fixed by the construction seed;
/// reset() only re-draws the agent spawn. Spawns sit in the western strip and
/// the goal in the eastern one, with two thirds of the hazards jittered into
/// a vertical band across the middle and the rest ringed around the goal, so
/// reaching the goal trades reward against hazard contact both early and
/// late in an episode.
class HazardGoalEnv : public Env {
 public:
  HazardGoalEnv(const HazardGoalConfig& cfg, std::uint64_t layout_seed)
      : cfg_(cfg), episode_rng_(0) {
    if (cfg.num_hazards < 1) throw std::invalid_argument("HazardGoalEnv: need at least one hazard");
    Rng layout(Rng::derive(layout_seed, 0x4859a1));
    const double a = cfg_.arena_half;
    goal_ = Vec(2);
    goal_[0] = layout.uniform(0.45 * a, 0.75 * a);
    goal_[1] = layout.uniform(-0.5 * a, 0.5 * a);
    hazards_.reserve(cfg_.num_hazards);
    const double clearance = cfg_.hazard_radius + cfg_.goal_radius + 0.05;
    const int ring = std::max(1, cfg_.num_hazards / 4);
    const int band = cfg_.num_hazards - ring;
    // Stratified wall across the middle: with the default radius the jitter
    // bounds keep adjacent circles overlapping, so crossing always costs.
    const double stride = 2.0 * a / band;
    for (int k = 0; k < band; ++k) {
      Vec h(2);
      h[0] = layout.uniform(-0.04 * a, 0.04 * a);
      h[1] = -a + (k + 0.5) * stride;
      hazards_.push_back(h);
    }
    // Scattered hazards around the goal: late-episode contact that a
    // truncated model rollout from the initial distribution rarely sees.
    while (static_cast<int>(hazards_.size()) < cfg_.num_hazards) {
      const double ang = layout.uniform(0.0, 6.283185307179586);
      const double dist = layout.uniform(clearance, clearance + 0.4 * a);
      Vec h(2);
      h[0] = goal_[0] + dist * std::cos(ang);
      h[1] = goal_[1] + dist * std::sin(ang);
      hazards_.push_back(h);
    }
    pos_ = Vec::Zero(2);
  }

  std::string name() const override { return "hazard_goal"; }
  int obs_dim() const override { return 4 + cfg_.lidar_bins; }
  int action_dim() const override { return 2; }
  int horizon() const override { return cfg_.horizon; }

  Vec reset(std::uint64_t seed) override {
    episode_rng_ = Rng(Rng::derive(seed, 0x4859a2));
    pos_ = spawn(episode_rng_);
    return observe(pos_);
  }

  Vec sample_initial(Rng& rng) const override { return observe(spawn(rng)); }

  Transition step(const Vec& action) override {
    Transition tr;
    tr.state = observe(pos_);
    tr.action = clip_action(action, &tr.action_clipped);
    Vec next = pos_ + cfg_.dt * tr.action;
    next[0] = std::clamp(next[0], -cfg_.arena_half, cfg_.arena_half);
    next[1] = std::clamp(next[1], -cfg_.arena_half, cfg_.arena_half);
    const double prev_dist = (goal_ - pos_).norm();
    const double dist = (goal_ - next).norm();
    tr.reward = cfg_.progress_gain * (prev_dist - dist);
    tr.cost = in_hazard(next) ? 1.0 : 0.0;
    tr.done = dist <= cfg_.goal_radius;
    if (tr.done) tr.reward += cfg_.goal_bonus;
    pos_ = next;
    tr.next_state = observe(pos_);
    return tr;
  }

  double reward_from(const Vec& obs, const Vec&, const Vec& next_obs) const override {
    const double prev_dist = goal_dist(obs);
    const double dist = goal_dist(next_obs);
    double r = cfg_.progress_gain * (prev_dist - dist);
    if (dist <= cfg_.goal_radius) r += cfg_.goal_bonus;
    return r;
  }

  double cost_from(const Vec&, const Vec&, const Vec& next_obs) const override {
    return in_hazard(next_obs.head(2)) ? 1.0 : 0.0;
  }

  /// Goal distance carried inside the observation (components 2..3 hold the
  /// goal-relative vector), so predicted observations can be scored directly.
  static double goal_dist(const Vec& obs) { return obs.segment(2, 2).norm(); }

  const Vec& goal() const { return goal_; }
  const std::vector<Vec>& hazards() const { return hazards_; }

  /// Test hook: place the agent directly.
  void set_position(const Vec& p) {
    if (p.size() != 2) throw std::invalid_argument("set_position: expected 2-D point");
    pos_ = p;
  }

  bool in_hazard(const Vec& p) const {
    for (const auto& h : hazards_)
      if ((p - h.head(2)).norm() <= cfg_.hazard_radius) return true;
    return false;
  }

 private:
  Vec spawn(Rng& rng) const {
    // Rejection sample from the western strip: outside every hazard and not
    // already on the goal.
    for (int attempt = 0; attempt < 10000; ++attempt) {
      Vec p(2);
      p[0] = rng.uniform(-0.95 * cfg_.arena_half, -0.35 * cfg_.arena_half);
      p[1] = rng.uniform(-0.95 * cfg_.arena_half, 0.95 * cfg_.arena_half);
      if (in_hazard(p)) continue;
      if ((p - goal_).norm() <= cfg_.goal_radius + 0.1) continue;
      return p;
    }
    throw std::runtime_error("HazardGoalEnv: could not find a free spawn cell");
  }

  Vec observe(const Vec& p) const {
    Vec obs(obs_dim());
    obs[0] = p[0];
    obs[1] = p[1];
    obs[2] = goal_[0] - p[0];
    obs[3] = goal_[1] - p[1];
    const int k = cfg_.lidar_bins;
    for (int b = 0; b < k; ++b) obs[4 + b] = 0.0;
    for (const auto& h : hazards_) {
      const double dx = h[0] - p[0], dy = h[1] - p[1];
      const double ang = std::atan2(dy, dx);  // [-pi, pi]
      int b = static_cast<int>((ang + kPi) / (2.0 * kPi) * k);
      b = std::clamp(b, 0, k - 1);
      const double edge = std::max(0.0, std::hypot(dx, dy) - cfg_.hazard_radius);
      const double closeness = std::max(0.0, 1.0 - edge / cfg_.lidar_range);
      obs[4 + b] = std::max(obs[4 + b], closeness);
    }
    return obs;
  }

  static constexpr double kPi = 3.141592653589793238462643383279502884;

  HazardGoalConfig cfg_;
  Vec goal_;
  std::vector<Vec> hazards_;
  Vec pos_;
  Rng episode_rng_;
};

}  // namespace saferl::env
