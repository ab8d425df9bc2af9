#pragma once

#include <cmath>
#include <cstdint>

#include "saferl/env/env.hpp"

namespace saferl::env {

struct CircleTrackConfig {
  double radius = 1.0;        // target circle radius
  double target_speed = 0.5;  // tangential speed with maximum reward
  double annulus_inner = 0.8; // as fractions of radius
  double annulus_outer = 1.2;
  double radial_sharpness = 25.0;
  double dt = 0.1;
  int horizon = 200;
};

/// Acceleration-controlled planar mass that earns reward for circulating at a
/// target tangential speed on a circle of fixed radius. Reward is
///   max(0, 1 - ((v_tan - v*)/v*)^2) / (1 + k (r - rho)^2),
/// maximized (value exactly 1) on the circle at the target speed. Cost is the
/// indicator of leaving the annulus [0.8 rho, 1.2 rho]. No terminal states.
class CircleTrackEnv : public Env {
 public:
  CircleTrackEnv(const CircleTrackConfig& cfg, std::uint64_t /*layout_seed*/)
      : cfg_(cfg), state_(Vec::Zero(4)) {}

  std::string name() const override { return "circle_track"; }
  int obs_dim() const override { return 4; }  // x, y, vx, vy
  int action_dim() const override { return 2; }
  int horizon() const override { return cfg_.horizon; }

  Vec reset(std::uint64_t seed) override {
    Rng rng(Rng::derive(seed, 0xc19c1e));
    state_ = draw_initial(rng);
    return state_;
  }

  Vec sample_initial(Rng& rng) const override { return draw_initial(rng); }

  Transition step(const Vec& action) override {
    Transition tr;
    tr.state = state_;
    tr.action = clip_action(action, &tr.action_clipped);
    Vec next(4);
    next[2] = state_[2] + cfg_.dt * tr.action[0];
    next[3] = state_[3] + cfg_.dt * tr.action[1];
    next[0] = state_[0] + cfg_.dt * next[2];
    next[1] = state_[1] + cfg_.dt * next[3];
    tr.reward = reward_at(next);
    tr.cost = cost_at(next);
    tr.done = false;
    state_ = next;
    tr.next_state = state_;
    return tr;
  }

  double reward_from(const Vec&, const Vec&, const Vec& next_obs) const override {
    return reward_at(next_obs);
  }

  double cost_from(const Vec&, const Vec&, const Vec& next_obs) const override {
    return cost_at(next_obs);
  }

  /// Test hook.
  void set_state(const Vec& s) {
    if (s.size() != 4) throw std::invalid_argument("set_state: expected (x, y, vx, vy)");
    state_ = s;
  }

  double reward_at(const Vec& s) const {
    const double r = std::hypot(s[0], s[1]);
    if (r < 1e-12) return 0.0;
    const double v_tan = (s[0] * s[3] - s[1] * s[2]) / r;  // counterclockwise positive
    const double speed_err = (v_tan - cfg_.target_speed) / cfg_.target_speed;
    const double speed_term = std::max(0.0, 1.0 - speed_err * speed_err);
    const double dr = r - cfg_.radius;
    return speed_term / (1.0 + cfg_.radial_sharpness * dr * dr);
  }

  double cost_at(const Vec& s) const {
    const double r = std::hypot(s[0], s[1]);
    return (r < cfg_.annulus_inner * cfg_.radius || r > cfg_.annulus_outer * cfg_.radius) ? 1.0
                                                                                          : 0.0;
  }

 private:
  Vec draw_initial(Rng& rng) const {
    const double ang = rng.uniform(0.0, 2.0 * kPi);
    Vec s(4);
    s[0] = cfg_.radius * std::cos(ang);
    s[1] = cfg_.radius * std::sin(ang);
    // modest tangential start plus noise
    const double v0 = 0.5 * cfg_.target_speed;
    s[2] = -v0 * std::sin(ang) + 0.05 * rng.normal();
    s[3] = v0 * std::cos(ang) + 0.05 * rng.normal();
    return s;
  }

  static constexpr double kPi = 3.141592653589793238462643383279502884;

  CircleTrackConfig cfg_;
  Vec state_;
};

}  // namespace saferl::env
