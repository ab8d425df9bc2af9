#pragma once

#include <cmath>

#include "saferl/env/discrete.hpp"
#include "saferl/env/oracle.hpp"
#include "saferl/rl/policy.hpp"

namespace saferl::rl {

/// Exact bin probabilities of a 1-D Gaussian action under the adapter's
/// equal-width binning of [low, high]: clipping folds the tails into the edge
/// bins, so bin k covers (edge_k, edge_{k+1}) with infinite outer edges.
inline env::PolicyMatrix policy_to_matrix(const GaussianPolicy& policy,
                                          const env::DiscreteEnvAdapter& adapter) {
  const auto& m = adapter.model();
  if (policy.action_dim() != 1)
    throw std::invalid_argument("policy_to_matrix: adapter actions are one-dimensional");
  const double low = adapter.action_low(), high = adapter.action_high();
  const int k = m.num_actions;
  env::PolicyMatrix pi(m.num_states, k);
  auto phi = [](double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); };
  for (int s = 0; s < m.num_states; ++s) {
    Vec obs = Vec::Zero(m.num_states);
    obs[s] = 1.0;
    const double mu = policy.mean(obs)[0];
    const double sigma = policy.stddev()[0];
    double prev_cdf = 0.0;
    for (int a = 0; a < k; ++a) {
      const double upper = low + (high - low) * (a + 1) / k;
      const double cdf = (a == k - 1) ? 1.0 : phi((upper - mu) / sigma);
      pi(s, a) = std::max(0.0, cdf - prev_cdf);
      prev_cdf = cdf;
    }
    pi.row(s) /= pi.row(s).sum();
  }
  return pi;
}

/// True J^R / J^C of the Gaussian policy on the tabular CMDP, by exact
/// policy evaluation of its binned action distribution.
inline double exact_return(const GaussianPolicy& policy, const env::DiscreteEnvAdapter& adapter,
                           env::Channel ch) {
  return env::policy_value(adapter.model(), policy_to_matrix(policy, adapter), ch);
}

}  // namespace saferl::rl
