#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "saferl/nn/adam.hpp"
#include "saferl/nn/mlp.hpp"

namespace saferl::nn {

// Parameter checkpoint layout, version 1:
//   { "format": 1, "layer_sizes": [...], "activation": "tanh",
//     "weights": [ [row-major doubles per layer] ... ],
//     "biases":  [ [doubles per layer] ... ] }
// nlohmann/json emits shortest round-tripping decimal forms, so doubles
// survive save/load bit-exactly.
inline constexpr int kParamsFormatVersion = 1;

inline nlohmann::json to_json(const MlpParams& p) {
  nlohmann::json j;
  j["format"] = kParamsFormatVersion;
  j["layer_sizes"] = p.layer_sizes;
  j["activation"] = "tanh";
  auto& jw = j["weights"] = nlohmann::json::array();
  auto& jb = j["biases"] = nlohmann::json::array();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Mat& w = p.weights[l];
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
    jw.push_back(row_major);
    jb.push_back(std::vector<double>(p.biases[l].data(), p.biases[l].data() + p.biases[l].size()));
  }
  return j;
}

inline MlpParams mlp_from_json(const nlohmann::json& j) {
  if (j.at("format").get<int>() != kParamsFormatVersion)
    throw std::runtime_error("mlp_from_json: unsupported format version");
  if (j.at("activation").get<std::string>() != "tanh")
    throw std::runtime_error("mlp_from_json: unknown activation");
  MlpParams p;
  p.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  const auto& jw = j.at("weights");
  const auto& jb = j.at("biases");
  if (jw.size() + 1 != p.layer_sizes.size() || jb.size() != jw.size())
    throw std::runtime_error("mlp_from_json: layer count mismatch");
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const int out = p.layer_sizes[l + 1], in = p.layer_sizes[l];
    auto wv = jw[l].get<std::vector<double>>();
    auto bv = jb[l].get<std::vector<double>>();
    if (static_cast<int>(wv.size()) != out * in || static_cast<int>(bv.size()) != out)
      throw std::runtime_error("mlp_from_json: array length mismatch");
    Mat w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = wv[static_cast<std::size_t>(r * in + c)];
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::Map<const Vec>(bv.data(), out));
  }
  validate(p);
  return p;
}

inline nlohmann::json to_json(const AdamState& st) {
  nlohmann::json j;
  j["format"] = kParamsFormatVersion;
  j["m"] = std::vector<double>(st.m.data(), st.m.data() + st.m.size());
  j["v"] = std::vector<double>(st.v.data(), st.v.data() + st.v.size());
  j["step"] = st.step;
  j["lr"] = st.lr;
  j["beta1"] = st.beta1;
  j["beta2"] = st.beta2;
  j["eps"] = st.eps;
  return j;
}

inline AdamState adam_from_json(const nlohmann::json& j) {
  AdamState st;
  auto mv = j.at("m").get<std::vector<double>>();
  auto vv = j.at("v").get<std::vector<double>>();
  st.m = Eigen::Map<const Vec>(mv.data(), static_cast<Eigen::Index>(mv.size()));
  st.v = Eigen::Map<const Vec>(vv.data(), static_cast<Eigen::Index>(vv.size()));
  st.step = j.at("step").get<std::int64_t>();
  st.lr = j.at("lr").get<double>();
  st.beta1 = j.at("beta1").get<double>();
  st.beta2 = j.at("beta2").get<double>();
  st.eps = j.at("eps").get<double>();
  return st;
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_json: cannot open " + path);
  f << j.dump(2) << '\n';
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_json: cannot open " + path);
  return nlohmann::json::parse(f);
}

}  // namespace saferl::nn
