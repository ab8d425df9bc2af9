#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "saferl/core/types.hpp"

namespace saferl::nn {

/// Adam state over a flat parameter vector. Structured parameter sets
/// (MLPs, policies) are flattened before stepping; the accumulators always
/// match the flattened parameter length exactly.
struct AdamState {
  Vec m;
  Vec v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam(Eigen::Index n, double lr) {
  AdamState st;
  st.m = Vec::Zero(n);
  st.v = Vec::Zero(n);
  st.lr = lr;
  return st;
}

inline void adam_step(Vec& params, const Vec& grad, AdamState& st) {
  if (params.size() != grad.size() || params.size() != st.m.size())
    throw std::invalid_argument("adam_step: shape mismatch between params, grad, and state");
  st.step += 1;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
  st.v = st.beta2 * st.v + (1.0 - st.beta2) * grad.array().square().matrix();
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  params.array() -= st.lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.eps);
}

}  // namespace saferl::nn
