#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "saferl/core/rng.hpp"
#include "saferl/nn/mlp.hpp"

namespace saferl::rl {

/// Diagonal-Gaussian actor: an MLP trunk maps observations to the action
/// mean; the log standard deviations are free, state-independent parameters
/// clamped into [-20, 2] wherever they are used.
struct GaussianPolicy {
  nn::MlpParams trunk;
  Vec log_std;

  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  int obs_dim() const { return trunk.input_dim(); }
  int action_dim() const { return trunk.output_dim(); }

  Vec clamped_log_std() const {
    return log_std.array().min(kLogStdMax).max(kLogStdMin).matrix();
  }

  Vec stddev() const { return clamped_log_std().array().exp().matrix(); }

  Vec mean(const Vec& obs) const { return nn::forward(trunk, obs); }

  double log_prob_with_mean(const Vec& mu, const Vec& action) const {
    const Vec ls = clamped_log_std();
    const Vec sigma = ls.array().exp().matrix();
    double lp = -0.5 * static_cast<double>(mu.size()) * kLog2Pi;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      const double z = (action[i] - mu[i]) / sigma[i];
      lp += -0.5 * z * z - ls[i];
    }
    return lp;
  }

  double log_prob(const Vec& obs, const Vec& action) const {
    return log_prob_with_mean(mean(obs), action);
  }

  std::pair<Vec, double> sample(const Vec& obs, Rng& rng) const {
    const Vec mu = mean(obs);
    const Vec sigma = stddev();
    Vec a(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) a[i] = mu[i] + sigma[i] * rng.normal();
    return {a, log_prob_with_mean(mu, a)};
  }

  long param_count() const { return nn::param_count(trunk) + log_std.size(); }

  Vec flat() const {
    Vec out(param_count());
    out.head(nn::param_count(trunk)) = nn::flatten(trunk);
    out.tail(log_std.size()) = log_std;
    return out;
  }

  void set_flat(const Vec& theta) {
    if (theta.size() != param_count())
      throw std::invalid_argument("GaussianPolicy::set_flat: length mismatch");
    Vec t = theta.head(nn::param_count(trunk));
    nn::unflatten(t, trunk);
    log_std = theta.tail(log_std.size());
  }

 private:
  static constexpr double kLog2Pi = 1.8378770664093454835606594728112;
};

inline GaussianPolicy make_policy(int obs_dim, int action_dim, const std::vector<int>& hidden,
                                  Rng& rng, double init_log_std = -0.5108256237659907 /* ln 0.6 */) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(action_dim);
  GaussianPolicy p;
  p.trunk = nn::make_mlp(sizes, rng);
  p.log_std = Vec::Constant(action_dim, init_log_std);
  return p;
}

}  // namespace saferl::rl
