#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "saferl/core/rng.hpp"
#include "saferl/core/types.hpp"

namespace saferl::nn {

enum class Activation { Tanh };

/// Fully-connected network parameters. weights[l] maps layer l to layer l+1
/// (rows = fan-out, cols = fan-in); hidden layers use tanh, the output layer
/// is linear.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  Activation activation = Activation::Tanh;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
};

/// Gradient (or any same-shaped accumulator) for MlpParams.
struct MlpGrads {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
};

inline void validate(const MlpParams& p) {
  if (p.layer_sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output layer");
  if (p.weights.size() != p.layer_sizes.size() - 1 || p.biases.size() != p.weights.size())
    throw std::invalid_argument("mlp: layer count mismatch");
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    if (p.layer_sizes[l] <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
    if (p.weights[l].rows() != p.layer_sizes[l + 1] || p.weights[l].cols() != p.layer_sizes[l])
      throw std::invalid_argument("mlp: weight shape inconsistent with layer sizes");
    if (p.biases[l].size() != p.layer_sizes[l + 1])
      throw std::invalid_argument("mlp: bias shape inconsistent with layer sizes");
    if (!p.weights[l].allFinite() || !p.biases[l].allFinite())
      throw std::invalid_argument("mlp: non-finite parameter value");
  }
}

/// Fan-in scaled uniform init, U(-s, s) with s = init_scale / sqrt(fan_in).
/// Scheme name is recorded in run metadata by the experiment layer.
inline MlpParams make_mlp(const std::vector<int>& sizes, Rng& rng, double init_scale = 1.0) {
  MlpParams p;
  p.layer_sizes = sizes;
  if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least two layers");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    if (in <= 0 || out <= 0) throw std::invalid_argument("make_mlp: layer sizes must be positive");
    Mat w(out, in);
    const double s = init_scale / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-s, s);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vec::Zero(out));
  }
  return p;
}

inline long param_count(const MlpParams& p) {
  long n = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l)
    n += p.weights[l].size() + p.biases[l].size();
  return n;
}

inline Vec flatten(const MlpParams& p) {
  Vec out(param_count(p));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const auto& w = p.weights[l];
    out.segment(k, w.size()) = Eigen::Map<const Vec>(w.data(), w.size());
    k += w.size();
    out.segment(k, p.biases[l].size()) = p.biases[l];
    k += p.biases[l].size();
  }
  return out;
}

inline void unflatten(const Vec& theta, MlpParams& p) {
  if (theta.size() != param_count(p)) throw std::invalid_argument("unflatten: length mismatch");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    auto& w = p.weights[l];
    Eigen::Map<Vec>(w.data(), w.size()) = theta.segment(k, w.size());
    k += w.size();
    p.biases[l] = theta.segment(k, p.biases[l].size());
    k += p.biases[l].size();
  }
}

inline MlpGrads zero_grads(const MlpParams& p) {
  MlpGrads g;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    g.weights.push_back(Mat::Zero(p.weights[l].rows(), p.weights[l].cols()));
    g.biases.push_back(Vec::Zero(p.biases[l].size()));
  }
  return g;
}

inline Vec flatten(const MlpGrads& g) {
  long n = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) n += g.weights[l].size() + g.biases[l].size();
  Vec out(n);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const auto& w = g.weights[l];
    out.segment(k, w.size()) = Eigen::Map<const Vec>(w.data(), w.size());
    k += w.size();
    out.segment(k, g.biases[l].size()) = g.biases[l];
    k += g.biases[l].size();
  }
  return out;
}

/// Post-activation values per layer for one batch; acts[0] is the input,
/// acts[L] the (linear) output. Needed by accumulate_backward.
struct ForwardTrace {
  std::vector<Mat> acts;
};

/// Batched forward pass; X holds one sample per column.
inline Mat forward_batch(const MlpParams& p, const Mat& x, ForwardTrace* trace = nullptr) {
  if (x.rows() != p.input_dim()) {
    std::ostringstream os;
    os << "mlp forward: input dim " << x.rows() << " != layer dim " << p.input_dim();
    throw std::invalid_argument(os.str());
  }
  Mat a = x;
  if (trace) {
    trace->acts.clear();
    trace->acts.push_back(a);
  }
  const int last = p.num_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    Mat z = (p.weights[l] * a).colwise() + p.biases[l];
    a = (l < last) ? z.array().tanh().matrix() : std::move(z);
    if (trace) trace->acts.push_back(a);
  }
  return a;
}

inline Vec forward(const MlpParams& p, const Vec& x) {
  return forward_batch(p, x);
}

/// Reverse pass. dl_dy is dLoss/dOutput, one column per sample, summed into
/// grads over the batch (scale dl_dy by 1/B upstream for a mean loss).
inline void accumulate_backward(const MlpParams& p, const ForwardTrace& trace, const Mat& dl_dy,
                                MlpGrads& grads) {
  const int last = p.num_layers() - 1;
  if (static_cast<int>(trace.acts.size()) != last + 2)
    throw std::invalid_argument("mlp backward: trace does not match network depth");
  if (dl_dy.rows() != p.output_dim() || dl_dy.cols() != trace.acts[0].cols())
    throw std::invalid_argument("mlp backward: output gradient shape mismatch");
  Mat delta = dl_dy;
  for (int l = last; l >= 0; --l) {
    grads.weights[l].noalias() += delta * trace.acts[l].transpose();
    grads.biases[l] += delta.rowwise().sum();
    if (l > 0) {
      // tanh'(z) = 1 - a^2 with a the stored post-activation
      Mat back = p.weights[l].transpose() * delta;
      delta = back.array() * (1.0 - trace.acts[l].array().square());
    }
  }
}

/// Convenience: gradient of a mean-squared-error regression loss
/// L = mean_i ||f(x_i) - y_i||^2, returned flattened. Also reports the loss.
inline double mse_loss_grad(const MlpParams& p, const Mat& x, const Mat& y, Vec* grad_out) {
  ForwardTrace tr;
  Mat pred = forward_batch(p, x, &tr);
  if (pred.rows() != y.rows() || pred.cols() != y.cols())
    throw std::invalid_argument("mse_loss_grad: target shape mismatch");
  const double inv_b = 1.0 / static_cast<double>(x.cols());
  Mat err = pred - y;
  double loss = err.squaredNorm() * inv_b;
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "mse loss is non-finite: " << loss;
    throw std::runtime_error(os.str());
  }
  if (grad_out) {
    MlpGrads g = zero_grads(p);
    Mat dl = 2.0 * inv_b * err;
    accumulate_backward(p, tr, dl, g);
    *grad_out = flatten(g);
  }
  return loss;
}

}  // namespace saferl::nn
