#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "saferl/core/rng.hpp"
#include "saferl/core/types.hpp"

namespace saferl::env {

/// One environment step. `action` is the action actually applied (after
/// clipping to bounds); `action_clipped` records whether clipping occurred.
struct Transition {
  Vec state;
  Vec action;
  Vec next_state;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
  bool action_clipped = false;
};

/// A trajectory. states has one more entry than the per-step arrays; the
/// actions stored here are the policy's raw samples (what log-probabilities
/// were recorded for), which the environment may clip when applying.
struct Episode {
  enum class Source { Real, Imaginary };

  std::vector<Vec> states;
  std::vector<Vec> actions;
  std::vector<double> rewards;
  std::vector<double> costs;
  std::vector<double> logps;
  bool terminal = false;  // ended by the environment, not by a horizon cut
  Source source = Source::Real;

  int length() const { return static_cast<int>(rewards.size()); }
};

enum class Channel { Reward, Cost };

/// Discounted return sum_t gamma^t x_{t+1} over one episode's chosen channel.
inline double episode_return(const Episode& ep, double gamma, Channel channel) {
  if (ep.length() == 0) throw std::invalid_argument("episode_return: empty trajectory");
  const auto& xs = channel == Channel::Reward ? ep.rewards : ep.costs;
  double acc = 0.0;
  double g = 1.0;
  for (double x : xs) {
    acc += g * x;
    g *= gamma;
  }
  return acc;
}

inline double undiscounted_sum(const Episode& ep, Channel channel) {
  const auto& xs = channel == Channel::Reward ? ep.rewards : ep.costs;
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc;
}

/// CMDP environment interface: vector observations, box-bounded continuous
/// actions, a per-step reward and a {0,1} hazard-indicator cost. reward_from
/// and cost_from expose the signal functions analytically so that rollouts
/// inside a learned dynamics model can be scored without touching the
/// environment state.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual double action_low() const { return -1.0; }
  virtual double action_high() const { return 1.0; }
  virtual int horizon() const = 0;

  /// Start a new episode; identical seeds give identical episodes under
  /// identical action sequences.
  virtual Vec reset(std::uint64_t seed) = 0;

  /// Draw an initial observation from the initial-state distribution without
  /// disturbing the live episode.
  virtual Vec sample_initial(Rng& rng) const = 0;

  virtual Transition step(const Vec& action) = 0;

  virtual double reward_from(const Vec& obs, const Vec& action, const Vec& next_obs) const = 0;
  virtual double cost_from(const Vec& obs, const Vec& action, const Vec& next_obs) const = 0;

 protected:
  /// Shared precondition handling: rejects non-finite actions, clips to
  /// bounds and reports whether clipping happened.
  Vec clip_action(const Vec& a, bool* clipped) const {
    if (a.size() != action_dim()) throw std::invalid_argument("step: action dimension mismatch");
    if (!a.allFinite()) throw std::invalid_argument("step: non-finite action");
    Vec out = a;
    bool any = false;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (out[i] < action_low()) {
        out[i] = action_low();
        any = true;
      } else if (out[i] > action_high()) {
        out[i] = action_high();
        any = true;
      }
    }
    if (clipped) *clipped = any;
    return out;
  }
};

}  // namespace saferl::env
