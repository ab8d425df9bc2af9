#pragma once

#include <json.hpp>

#include "saferl/nn/serialize.hpp"
#include "saferl/rl/mbppo.hpp"

namespace saferl::exp {

// Checkpoint format (version 1): JSON with enough state for exact resume of
// a model-based run (agent, optimizers, multiplier, ensemble with
// normalization statistics, accumulated real dataset, rng streams, counters).

inline nlohmann::json to_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vec vec_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

inline Mat mat_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("mat_from_json: size mismatch");
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
  return m;
}

inline nlohmann::json to_json(const rl::LagrangeState& ls) {
  return {{"lambda", ls.lambda}, {"d", ls.d},         {"beta", ls.beta},
          {"lr", ls.lr},         {"lr_decay", ls.lr_decay}, {"step", ls.step}};
}

inline rl::LagrangeState lagrange_from_json(const nlohmann::json& j) {
  rl::LagrangeState ls;
  ls.lambda = j.at("lambda").get<double>();
  ls.d = j.at("d").get<double>();
  ls.beta = j.at("beta").get<double>();
  ls.lr = j.at("lr").get<double>();
  ls.lr_decay = j.at("lr_decay").get<double>();
  ls.step = j.at("step").get<std::int64_t>();
  return ls;
}

inline nlohmann::json to_json(const rl::GaussianPolicy& p) {
  return {{"trunk", nn::to_json(p.trunk)}, {"log_std", to_json(p.log_std)}};
}

inline rl::GaussianPolicy policy_from_json(const nlohmann::json& j) {
  rl::GaussianPolicy p;
  p.trunk = nn::mlp_from_json(j.at("trunk"));
  p.log_std = vec_from_json(j.at("log_std"));
  return p;
}

inline nlohmann::json to_json(const rl::Agent& a) {
  return {{"policy", to_json(a.policy)},
          {"vr", nn::to_json(a.critics.vr)},
          {"vc", nn::to_json(a.critics.vc)},
          {"opt_actor", nn::to_json(a.opt_actor)},
          {"opt_vr", nn::to_json(a.opt_vr)},
          {"opt_vc", nn::to_json(a.opt_vc)},
          {"lagrange", to_json(a.lagrange)}};
}

inline rl::Agent agent_from_json(const nlohmann::json& j) {
  rl::Agent a;
  a.policy = policy_from_json(j.at("policy"));
  a.critics.vr = nn::mlp_from_json(j.at("vr"));
  a.critics.vc = nn::mlp_from_json(j.at("vc"));
  a.opt_actor = nn::adam_from_json(j.at("opt_actor"));
  a.opt_vr = nn::adam_from_json(j.at("opt_vr"));
  a.opt_vc = nn::adam_from_json(j.at("opt_vc"));
  a.lagrange = lagrange_from_json(j.at("lagrange"));
  return a;
}

inline nlohmann::json to_json(const model::DynamicsEnsemble& e) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : e.members) members.push_back(nn::to_json(m.trunk));
  return {{"members", members},
          {"input_mean", to_json(e.input_norm.mean)},
          {"input_std", to_json(e.input_norm.std)},
          {"target_mean", to_json(e.target_norm.mean)},
          {"target_std", to_json(e.target_norm.std)},
          {"val_nll", e.val_nll},
          {"elites", e.elites},
          {"trained", e.trained},
          {"state_dim", e.state_dim},
          {"action_dim", e.action_dim}};
}

inline model::DynamicsEnsemble ensemble_from_json(const nlohmann::json& j) {
  model::DynamicsEnsemble e;
  for (const auto& m : j.at("members")) {
    model::GaussianDynamicsMember member;
    member.trunk = nn::mlp_from_json(m);
    e.members.push_back(std::move(member));
  }
  e.input_norm.mean = vec_from_json(j.at("input_mean"));
  e.input_norm.std = vec_from_json(j.at("input_std"));
  e.target_norm.mean = vec_from_json(j.at("target_mean"));
  e.target_norm.std = vec_from_json(j.at("target_std"));
  e.val_nll = j.at("val_nll").get<std::vector<double>>();
  e.elites = j.at("elites").get<std::vector<int>>();
  e.trained = j.at("trained").get<bool>();
  e.state_dim = j.at("state_dim").get<int>();
  e.action_dim = j.at("action_dim").get<int>();
  return e;
}

inline nlohmann::json to_json(const rl::MbppoState& st) {
  nlohmann::json j;
  j["format"] = 1;
  j["agent"] = to_json(st.agent);
  j["ensemble"] = to_json(st.ensemble);
  j["dataset_inputs"] = mat_to_json(st.dataset.inputs);
  j["dataset_deltas"] = mat_to_json(st.dataset.deltas);
  j["rng"] = {{"collect", st.collect_rng.state()},
              {"update", st.update_rng.state()},
              {"model", st.model_rng.state()},
              {"rollout", st.rollout_rng.state()},
              {"pr", st.pr_rng.state()}};
  j["interactions"] = st.interactions;
  j["cumulative_violations"] = st.cumulative_violations;
  j["epoch"] = st.epoch;
  return j;
}

inline rl::MbppoState mbppo_state_from_json(const nlohmann::json& j) {
  if (j.at("format").get<int>() != 1)
    throw std::runtime_error("mbppo_state_from_json: unsupported checkpoint version");
  rl::MbppoState st;
  st.agent = agent_from_json(j.at("agent"));
  st.ensemble = ensemble_from_json(j.at("ensemble"));
  st.dataset.inputs = mat_from_json(j.at("dataset_inputs"));
  st.dataset.deltas = mat_from_json(j.at("dataset_deltas"));
  st.collect_rng.set_state(j.at("rng").at("collect").get<std::string>());
  st.update_rng.set_state(j.at("rng").at("update").get<std::string>());
  st.model_rng.set_state(j.at("rng").at("model").get<std::string>());
  st.rollout_rng.set_state(j.at("rng").at("rollout").get<std::string>());
  st.pr_rng.set_state(j.at("rng").at("pr").get<std::string>());
  st.interactions = j.at("interactions").get<long>();
  st.cumulative_violations = j.at("cumulative_violations").get<long>();
  st.epoch = j.at("epoch").get<int>();
  return st;
}

}  // namespace saferl::exp
