#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "saferl/rl/estimation.hpp"
#include "test_util.hpp"

using namespace saferl;
using namespace saferl::rl;
using env::Channel;
using env::Episode;

namespace {

Episode make_episode(Rng& rng, int len, int obs_dim, bool terminal) {
  Episode ep;
  ep.terminal = terminal;
  for (int t = 0; t <= len; ++t) {
    Vec s(obs_dim);
    for (int i = 0; i < obs_dim; ++i) s[i] = rng.uniform(-1, 1);
    ep.states.push_back(s);
  }
  for (int t = 0; t < len; ++t) {
    ep.actions.push_back(Vec::Zero(1));
    ep.logps.push_back(0.0);
    ep.rewards.push_back(rng.uniform(-1, 2));
    ep.costs.push_back(rng.below(3) == 0 ? 1.0 : 0.0);
  }
  return ep;
}

nn::MlpParams zero_critic(int obs_dim) {
  Rng rng(0);
  return nn::make_mlp({obs_dim, 4, 1}, rng, 0.0);
}

/// Brute-force GAE oracle: O(T^2) double sum of (gamma lam)^l delta_{t+l}
/// with deltas computed independently of the library's recursion.
std::vector<double> gae_oracle(const Episode& ep, const nn::MlpParams& v, double gamma, double lam,
                               Channel ch) {
  const int n = ep.length();
  const auto& xs = ch == Channel::Reward ? ep.rewards : ep.costs;
  std::vector<double> deltas(n);
  for (int t = 0; t < n; ++t) {
    const double vt = nn::forward(v, ep.states[t])[0];
    double vn = nn::forward(v, ep.states[t + 1])[0];
    if (t == n - 1 && ep.terminal) vn = 0.0;
    deltas[t] = xs[t] + gamma * vn - vt;
  }
  std::vector<double> adv(n, 0.0);
  for (int t = 0; t < n; ++t)
    for (int l = 0; t + l < n; ++l) adv[t] += std::pow(gamma * lam, l) * deltas[t + l];
  return adv;
}

}  // namespace

TEST_CASE("returns_to_go: gamma = 0 collapses to the immediate signal") {
  Rng rng(1);
  Episode ep = make_episode(rng, 3, 2, false);
  ep.rewards = {1, 1, 1};
  auto rtg = returns_to_go(ep, 0.0, Channel::Reward);
  CHECK(rtg == std::vector<double>{1, 1, 1});
}

TEST_CASE("returns_to_go: hand-computed tail sums") {
  Rng rng(2);
  Episode ep = make_episode(rng, 3, 2, false);
  ep.rewards = {0, 0, 5};
  auto rtg = returns_to_go(ep, 0.9, Channel::Reward);
  CHECK(rtg[0] == doctest::Approx(4.05).epsilon(1e-12));
  CHECK(rtg[1] == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(rtg[2] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("returns_to_go: matches the O(T^2) summation oracle") {
  Rng rng(3);
  Episode ep = make_episode(rng, 50, 3, false);
  const double gamma = 0.97;
  auto rtg = returns_to_go(ep, gamma, Channel::Reward);
  for (int t = 0; t < ep.length(); ++t) {
    double direct = 0.0;
    for (int k = t; k < ep.length(); ++k) direct += std::pow(gamma, k - t) * ep.rewards[k];
    CHECK(std::abs(rtg[t] - direct) < 1e-12);
  }
  CHECK(rtg.back() == ep.rewards.back());
}

TEST_CASE("gae: zero critic with lam = 1 telescopes to returns-to-go") {
  Rng rng(4);
  Episode ep = make_episode(rng, 20, 3, true);
  auto v = zero_critic(3);
  auto adv = gae(ep, v, 0.99, 1.0, Channel::Reward);
  auto rtg = returns_to_go(ep, 0.99, Channel::Reward);
  for (int t = 0; t < ep.length(); ++t) CHECK(adv[t] == doctest::Approx(rtg[t]).epsilon(1e-12));
}

TEST_CASE("gae: lam = 0 reduces to the one-step temporal difference") {
  Rng rng(5);
  Episode ep = make_episode(rng, 15, 2, false);
  Rng nrng(6);
  auto v = nn::make_mlp({2, 8, 1}, nrng);
  auto adv = gae(ep, v, 0.99, 0.0, Channel::Reward);
  for (int t = 0; t < ep.length(); ++t) {
    const double vt = nn::forward(v, ep.states[t])[0];
    const double vn = nn::forward(v, ep.states[t + 1])[0];
    const double delta = ep.rewards[t] + 0.99 * vn - vt;
    CHECK(adv[t] == doctest::Approx(delta).epsilon(1e-12));
  }
}

TEST_CASE("gae: matches the brute-force weighted delta sum for all lam") {
  Rng rng(7);
  Rng nrng(8);
  auto v = nn::make_mlp({3, 8, 1}, nrng);
  for (double lam : {0.0, 0.5, 0.95, 1.0}) {
    for (int rep = 0; rep < 25; ++rep) {
      Episode ep = make_episode(rng, 1 + rng.below_int(40), 3, rng.below(2) == 0);
      auto fast = gae(ep, v, 0.99, lam, Channel::Cost);
      auto slow = gae_oracle(ep, v, 0.99, lam, Channel::Cost);
      for (int t = 0; t < ep.length(); ++t) CHECK(std::abs(fast[t] - slow[t]) < 1e-10);
    }
  }
}

TEST_CASE("gae/returns: identical code path for both channels (bitwise)") {
  Rng rng(9);
  Episode ep = make_episode(rng, 30, 2, false);
  ep.costs = ep.rewards;  // r == c
  Rng nrng(10);
  auto v = nn::make_mlp({2, 6, 1}, nrng);
  CHECK(returns_to_go(ep, 0.95, Channel::Reward) == returns_to_go(ep, 0.95, Channel::Cost));
  CHECK(gae(ep, v, 0.95, 0.9, Channel::Reward) == gae(ep, v, 0.95, 0.9, Channel::Cost));
}

TEST_CASE("gae: one-step terminal episode gives r - V(s0)") {
  Rng rng(11);
  Episode ep = make_episode(rng, 1, 2, true);
  Rng nrng(12);
  auto v = nn::make_mlp({2, 6, 1}, nrng);
  auto adv = gae(ep, v, 0.99, 0.95, Channel::Reward);
  CHECK(adv[0] == doctest::Approx(ep.rewards[0] - nn::forward(v, ep.states[0])[0]).epsilon(1e-12));
}

TEST_CASE("assemble_batch: internal consistency of returns and normalization") {
  Rng rng(13);
  std::vector<Episode> eps;
  for (int i = 0; i < 4; ++i) eps.push_back(make_episode(rng, 10 + i, 3, i % 2 == 0));
  CriticPair critics{zero_critic(3), zero_critic(3)};
  BatchOptions opt;
  opt.gamma = 0.98;
  RolloutBatch b = assemble_batch(eps, critics, opt);
  CHECK(b.size() == 10 + 11 + 12 + 13);
  CHECK(b.num_episodes() == 4);
  // recursion: rtg_t = x_{t+1} + gamma rtg_{t+1} at interior steps
  for (int e = 0; e < b.num_episodes(); ++e) {
    for (int k = b.episode_offset[e]; k + 1 < b.episode_offset[e + 1]; ++k) {
      const int t = k - b.episode_offset[e];
      CHECK(std::abs(b.rtg_r[k] - (eps[e].rewards[t] + opt.gamma * b.rtg_r[k + 1])) < 1e-10);
      CHECK(std::abs(b.rtg_c[k] - (eps[e].costs[t] + opt.gamma * b.rtg_c[k + 1])) < 1e-10);
    }
  }
  // standardized reward advantages; cost advantages share the same batch
  // scale factor (and only that) so the channels stay commensurable
  CHECK(std::abs(b.adv_r.mean()) < 1e-8);
  Vec raw_r(b.size()), raw_c(b.size());
  int k = 0;
  for (const auto& ep : eps) {
    auto ar = gae(ep, critics.vr, opt.gamma, opt.gae_lambda, Channel::Reward);
    auto ac = gae(ep, critics.vc, opt.gamma, opt.gae_lambda, Channel::Cost);
    for (std::size_t t = 0; t < ar.size(); ++t) {
      raw_r[k] = ar[t];
      raw_c[k] = ac[t];
      ++k;
    }
  }
  const double mean_r = raw_r.mean();
  const double sd_r =
      std::sqrt((raw_r.array() - mean_r).square().sum() / (b.size() - 1));
  for (int i = 0; i < b.size(); ++i)
    CHECK(b.adv_c[i] == doctest::Approx(raw_c[i] / sd_r).epsilon(1e-14));
  // with normalization off, both channels stay raw
  BatchOptions raw_opt = opt;
  raw_opt.normalize_reward_adv = false;
  RolloutBatch braw = assemble_batch(eps, critics, raw_opt);
  CHECK(braw.adv_c == raw_c);
  CHECK(braw.adv_r == raw_r);
}

TEST_CASE("assemble_batch: truncated episodes bootstrap value targets with V(s_L)") {
  Rng rng(14);
  Episode ep = make_episode(rng, 5, 2, false);
  Rng nrng(15);
  CriticPair critics{nn::make_mlp({2, 6, 1}, nrng), nn::make_mlp({2, 6, 1}, nrng)};
  BatchOptions opt;
  opt.gamma = 0.9;
  RolloutBatch b = assemble_batch({ep}, critics, opt);
  const double boot = nn::forward(critics.vr, ep.states[5])[0];
  auto rtg = returns_to_go(ep, 0.9, Channel::Reward);
  for (int t = 0; t < 5; ++t)
    CHECK(b.target_r[t] == doctest::Approx(rtg[t] + std::pow(0.9, 5 - t) * boot).epsilon(1e-12));

  Episode term = ep;
  term.terminal = true;
  RolloutBatch bt = assemble_batch({term}, critics, opt);
  for (int t = 0; t < 5; ++t) CHECK(bt.target_r[t] == doctest::Approx(rtg[t]).epsilon(1e-12));
}

TEST_CASE("critic_update: zero-target zero-net fixpoint") {
  auto v = zero_critic(2);
  auto opt = nn::make_adam(nn::param_count(v), 1e-3);
  Mat obs(2, 4);
  obs.setRandom();
  Vec before = nn::flatten(v);
  const double loss = critic_update(v, opt, obs, Vec::Zero(4));
  CHECK(loss == 0.0);
  CHECK(nn::flatten(v) == before);
}

TEST_CASE("critic_update: regresses a single state to a constant") {
  Rng rng(16);
  auto v = nn::make_mlp({2, 8, 1}, rng);
  auto opt = nn::make_adam(nn::param_count(v), 1e-2);
  Mat obs(2, 1);
  obs << 0.4, -0.7;
  Vec target(1);
  target << 3.7;
  for (int i = 0; i < 500; ++i) critic_update(v, opt, obs, target);
  CHECK(std::abs(nn::forward(v, obs.col(0))[0] - 3.7) < 1e-2);
}

TEST_CASE("critic_update: loss decreases on a frozen batch across seeds") {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    auto v = nn::make_mlp({3, 16, 1}, rng);
    auto opt = nn::make_adam(nn::param_count(v), 1e-3);
    Mat obs(3, 64);
    Vec target(64);
    for (int i = 0; i < obs.size(); ++i) obs.data()[i] = rng.uniform(-1, 1);
    for (int i = 0; i < 64; ++i) target[i] = rng.uniform(-2, 2);
    const double first = critic_update(v, opt, obs, target);
    double last = first;
    for (int i = 0; i < 49; ++i) last = critic_update(v, opt, obs, target);
    CHECK(last < first);
  }
}
