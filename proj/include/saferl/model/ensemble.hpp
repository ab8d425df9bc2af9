#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "saferl/core/rng.hpp"
#include "saferl/env/env.hpp"
#include "saferl/nn/adam.hpp"
#include "saferl/nn/mlp.hpp"
#include "saferl/rl/policy.hpp"

namespace saferl::model {

/// Per-dimension affine normalization statistics.
struct Normalizer {
  Vec mean;
  Vec std;

  void fit(const Mat& data) {  // one sample per column
    const double n = static_cast<double>(data.cols());
    mean = data.rowwise().mean();
    Vec var = ((data.colwise() - mean).array().square().rowwise().sum() / std::max(1.0, n - 1.0))
                  .matrix();
    std = var.array().sqrt().max(1e-8).matrix();
    if (!mean.allFinite() || !std.allFinite())
      throw std::runtime_error("Normalizer: non-finite statistics");
  }

  Mat normalize(const Mat& x) const { return (x.colwise() - mean).array().colwise() / std.array(); }
  Vec normalize(const Vec& x) const { return ((x - mean).array() / std.array()).matrix(); }
  Vec denormalize(const Vec& x) const { return (x.array() * std.array()).matrix() + mean; }
};

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Smooth two-sided bound keeping log-variances inside (min, max); the
/// bounds are approached asymptotically so gradients never die outright.
struct LogVarClamp {
  static constexpr double kMin = -10.0;
  static constexpr double kMax = 4.0;

  static double value(double raw) {
    const double upper = kMax - softplus(kMax - raw);
    return kMin + softplus(upper - kMin);
  }
  static double derivative(double raw) {
    const double upper = kMax - softplus(kMax - raw);
    return sigmoid(kMax - raw) * sigmoid(upper - kMin);
  }
};

/// One ensemble member: an MLP from normalized (state, action) to the
/// normalized state delta's mean and raw log-variance (two stacked heads).
struct GaussianDynamicsMember {
  nn::MlpParams trunk;

  int state_dim() const { return trunk.output_dim() / 2; }
};

struct GaussianPrediction {
  Vec mean;    // normalized delta mean
  Vec logvar;  // clamped log-variance
};

inline GaussianPrediction predict_norm(const GaussianDynamicsMember& m, const Vec& x_norm) {
  Vec out = nn::forward(m.trunk, x_norm);
  const int d = m.state_dim();
  GaussianPrediction p;
  p.mean = out.head(d);
  p.logvar = out.tail(d).unaryExpr(&LogVarClamp::value);
  return p;
}

/// Gaussian negative log-likelihood in the form
///   sum_t (mu - y)' Sigma^-1 (mu - y) + log |Sigma|
/// over the given normalized batch (constant term omitted). When grad_out is
/// non-null also computes d(mean-per-sample loss)/d(trunk params).
inline double nll_loss(const GaussianDynamicsMember& m, const Mat& x_norm, const Mat& y_norm,
                       Vec* grad_out = nullptr) {
  const int b = static_cast<int>(x_norm.cols());
  if (y_norm.cols() != b) throw std::invalid_argument("nll_loss: batch size mismatch");
  const int d = m.state_dim();
  if (y_norm.rows() != d) throw std::invalid_argument("nll_loss: target dimension mismatch");

  nn::ForwardTrace trace;
  Mat out = nn::forward_batch(m.trunk, x_norm, grad_out ? &trace : nullptr);
  double total = 0.0;
  Mat dl;
  if (grad_out) dl = Mat::Zero(2 * d, b);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < d; ++j) {
      const double raw = out(d + j, i);
      const double v = LogVarClamp::value(raw);
      const double inv = std::exp(-v);
      const double e = out(j, i) - y_norm(j, i);
      total += e * e * inv + v;
      if (grad_out) {
        dl(j, i) = 2.0 * e * inv / b;
        dl(d + j, i) = (1.0 - e * e * inv) * LogVarClamp::derivative(raw) / b;
      }
    }
  }
  if (!std::isfinite(total)) {
    std::ostringstream os;
    os << "nll_loss: non-finite value " << total;
    throw std::runtime_error(os.str());
  }
  if (grad_out) {
    nn::MlpGrads g = nn::zero_grads(m.trunk);
    nn::accumulate_backward(m.trunk, trace, dl, g);
    *grad_out = nn::flatten(g);
  }
  return total;
}

struct EnsembleConfig {
  int members = 8;
  int elites = 6;
  std::vector<int> hidden = {200, 200, 200, 200};
  double lr = 1e-3;
  int minibatch = 256;
  int max_epochs = 200;
  int patience = 8;
  double val_fraction = 0.1;
  bool bootstrap = true;  // resample each member's training split with replacement
  long min_dataset = 100;

  void validate() const {
    if (members < 2) throw std::invalid_argument("EnsembleConfig: need at least two members");
    if (elites < 1 || elites > members)
      throw std::invalid_argument("EnsembleConfig: elite count must lie in [1, members]");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
      throw std::invalid_argument("EnsembleConfig: validation fraction outside (0,1)");
  }
};

/// Raw (unnormalized) transition regression data, one sample per column.
struct TransitionDataset {
  Mat inputs;  // (state_dim + action_dim) x N
  Mat deltas;  // state_dim x N

  long size() const { return inputs.cols(); }
};

inline TransitionDataset make_dataset(const std::vector<env::Episode>& episodes, int state_dim,
                                      int action_dim) {
  long total = 0;
  for (const auto& ep : episodes) total += ep.length();
  TransitionDataset ds;
  ds.inputs.resize(state_dim + action_dim, total);
  ds.deltas.resize(state_dim, total);
  long k = 0;
  for (const auto& ep : episodes) {
    for (int t = 0; t < ep.length(); ++t) {
      ds.inputs.col(k).head(state_dim) = ep.states[t];
      ds.inputs.col(k).tail(action_dim) = ep.actions[t];
      ds.deltas.col(k) = ep.states[t + 1] - ep.states[t];
      ++k;
    }
  }
  return ds;
}

inline void append_dataset(TransitionDataset& ds, const TransitionDataset& extra) {
  if (ds.size() == 0) {
    ds = extra;
    return;
  }
  const long n = ds.size(), m = extra.size();
  ds.inputs.conservativeResize(Eigen::NoChange, n + m);
  ds.deltas.conservativeResize(Eigen::NoChange, n + m);
  ds.inputs.rightCols(m) = extra.inputs;
  ds.deltas.rightCols(m) = extra.deltas;
}

struct DynamicsEnsemble {
  std::vector<GaussianDynamicsMember> members;
  Normalizer input_norm;
  Normalizer target_norm;
  std::vector<double> val_nll;  // per-member held-out NLL (mean per sample)
  std::vector<int> elites;      // member indices, best validation first
  bool trained = false;
  int state_dim = 0;
  int action_dim = 0;
};

inline DynamicsEnsemble make_ensemble(int state_dim, int action_dim, const EnsembleConfig& cfg,
                                      Rng& rng) {
  cfg.validate();
  DynamicsEnsemble e;
  e.state_dim = state_dim;
  e.action_dim = action_dim;
  std::vector<int> sizes;
  sizes.push_back(state_dim + action_dim);
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(2 * state_dim);
  for (int i = 0; i < cfg.members; ++i) {
    GaussianDynamicsMember m;
    m.trunk = nn::make_mlp(sizes, rng);  // random init diversity across members
    e.members.push_back(std::move(m));
  }
  return e;
}

struct MemberTrainReport {
  double init_val_nll = 0.0;
  double final_val_nll = 0.0;
  int epochs = 0;
};

struct TrainReport {
  std::vector<MemberTrainReport> members;
};

/// Trains every member on its own bootstrap-resampled split with NLL
/// minimization and early stopping on a held-out validation set; the best
/// validation parameters are restored, so a member never ends worse than it
/// started. Elites are the members with the lowest validation NLL.
inline TrainReport train_ensemble(DynamicsEnsemble& e, const TransitionDataset& data,
                                  const EnsembleConfig& cfg, Rng& rng) {
  cfg.validate();
  if (data.size() < cfg.min_dataset) {
    std::ostringstream os;
    os << "train_ensemble: dataset has " << data.size() << " transitions, need at least "
       << cfg.min_dataset;
    throw std::invalid_argument(os.str());
  }
  if (static_cast<int>(e.members.size()) != cfg.members)
    throw std::invalid_argument("train_ensemble: member count does not match config");

  e.input_norm.fit(data.inputs);
  e.target_norm.fit(data.deltas);
  const Mat xn = e.input_norm.normalize(data.inputs);
  const Mat yn = e.target_norm.normalize(data.deltas);
  const long n = data.size();

  TrainReport report;
  e.val_nll.assign(e.members.size(), 0.0);
  for (std::size_t mi = 0; mi < e.members.size(); ++mi) {
    GaussianDynamicsMember& member = e.members[mi];

    // member-specific 90/10 split, then a bootstrap resample of the 90%
    std::vector<long> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const long n_val = std::max<long>(1, static_cast<long>(std::lround(n * cfg.val_fraction)));
    std::vector<long> val_idx(perm.begin(), perm.begin() + n_val);
    std::vector<long> pool(perm.begin() + n_val, perm.end());
    std::vector<long> train_idx(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      train_idx[i] = cfg.bootstrap ? pool[rng.below(pool.size())] : pool[i];

    Mat xv(xn.rows(), n_val), yv(yn.rows(), n_val);
    for (long i = 0; i < n_val; ++i) {
      xv.col(i) = xn.col(val_idx[i]);
      yv.col(i) = yn.col(val_idx[i]);
    }
    auto val_score = [&]() { return nll_loss(member, xv, yv) / static_cast<double>(n_val); };

    MemberTrainReport mr;
    mr.init_val_nll = val_score();
    double best = mr.init_val_nll;
    Vec best_params = nn::flatten(member.trunk);
    nn::AdamState opt = nn::make_adam(nn::param_count(member.trunk), cfg.lr);

    int stall = 0;
    for (int epoch = 0; epoch < cfg.max_epochs && stall < cfg.patience; ++epoch) {
      rng.shuffle(train_idx);
      for (std::size_t start = 0; start < train_idx.size();
           start += static_cast<std::size_t>(cfg.minibatch)) {
        const std::size_t stop =
            std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.minibatch));
        Mat xb(xn.rows(), stop - start), yb(yn.rows(), stop - start);
        for (std::size_t i = start; i < stop; ++i) {
          xb.col(i - start) = xn.col(train_idx[i]);
          yb.col(i - start) = yn.col(train_idx[i]);
        }
        Vec grad;
        nll_loss(member, xb, yb, &grad);
        Vec theta = nn::flatten(member.trunk);
        nn::adam_step(theta, grad, opt);
        nn::unflatten(theta, member.trunk);
      }
      mr.epochs = epoch + 1;
      const double score = val_score();
      if (score < best - 1e-6) {
        best = score;
        best_params = nn::flatten(member.trunk);
        stall = 0;
      } else {
        ++stall;
      }
    }
    nn::unflatten(best_params, member.trunk);
    mr.final_val_nll = best;
    e.val_nll[mi] = best;
    report.members.push_back(mr);
  }

  std::vector<int> order(e.members.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return e.val_nll[a] < e.val_nll[b]; });
  e.elites.assign(order.begin(), order.begin() + cfg.elites);
  e.trained = true;
  return report;
}

/// Mean state delta prediction of one member, in raw (environment) units.
inline Vec predict_delta_mean(const DynamicsEnsemble& e, int member, const Vec& s, const Vec& a) {
  Vec x(s.size() + a.size());
  x << s, a;
  GaussianPrediction p = predict_norm(e.members[member], e.input_norm.normalize(x));
  return e.target_norm.denormalize(p.mean);
}

/// One Gaussian step inside a specific member: s' = s + delta with
/// delta ~ N(denorm(mean), (std_target * exp(logvar/2))^2). Draws state_dim
/// normal variates from rng.
inline Vec sample_next_member(const DynamicsEnsemble& e, int member, const Vec& s, const Vec& a,
                              Rng& rng) {
  Vec x(s.size() + a.size());
  x << s, a;
  GaussianPrediction p = predict_norm(e.members[member], e.input_norm.normalize(x));
  Vec delta_norm(p.mean.size());
  for (Eigen::Index j = 0; j < delta_norm.size(); ++j)
    delta_norm[j] = p.mean[j] + std::exp(0.5 * p.logvar[j]) * rng.normal();
  return s + e.target_norm.denormalize(delta_norm);
}

/// Per-step random elite selection followed by a Gaussian draw.
inline Vec sample_next(const DynamicsEnsemble& e, const Vec& s, const Vec& a, Rng& rng) {
  if (!e.trained || e.elites.empty())
    throw std::logic_error("sample_next: ensemble has not been trained");
  const int member = e.elites[static_cast<std::size_t>(rng.below(e.elites.size()))];
  return sample_next_member(e, member, s, a, rng);
}

/// Discounted reward return of one stochastic-policy rollout inside a single
/// member, scored with the environment's analytic reward function.
inline double member_rollout_return(const DynamicsEnsemble& e, int member, const env::Env& env,
                                    const rl::GaussianPolicy& policy, double gamma, int horizon,
                                    Rng& rng) {
  Vec s = env.sample_initial(rng);
  double acc = 0.0;
  double g = 1.0;
  for (int t = 0; t < horizon; ++t) {
    auto [a, logp] = policy.sample(s, rng);
    (void)logp;
    Vec s2 = sample_next_member(e, member, s, a, rng);
    acc += g * env.reward_from(s, a, s2);
    g *= gamma;
    s = s2;
  }
  return acc;
}

/// Fraction of elite members in which policy_new beats policy_old on
/// model-rollout reward returns. Both policies are evaluated with common
/// random numbers per member (shared seed), so identical policies tie in
/// every member and PR is exactly 0.
inline double performance_ratio(const DynamicsEnsemble& e, const env::Env& env,
                                const rl::GaussianPolicy& policy_new,
                                const rl::GaussianPolicy& policy_old, double gamma, int horizon,
                                int episodes, Rng& rng) {
  if (!e.trained || e.elites.empty())
    throw std::logic_error("performance_ratio: ensemble has not been trained");
  if (episodes < 1) throw std::invalid_argument("performance_ratio: need at least one episode");
  int improved = 0;
  for (int member : e.elites) {
    const std::uint64_t member_seed = rng.next_u64();
    double zeta_new = 0.0, zeta_old = 0.0;
    {
      Rng stream(member_seed);
      for (int k = 0; k < episodes; ++k)
        zeta_new += member_rollout_return(e, member, env, policy_new, gamma, horizon, stream);
    }
    {
      Rng stream(member_seed);
      for (int k = 0; k < episodes; ++k)
        zeta_old += member_rollout_return(e, member, env, policy_old, gamma, horizon, stream);
    }
    if (zeta_new > zeta_old) ++improved;
  }
  return static_cast<double>(improved) / static_cast<double>(e.elites.size());
}

}  // namespace saferl::model
