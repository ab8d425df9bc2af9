#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "saferl/rl/train_common.hpp"

namespace saferl::exp {

/// Running count of real-environment unit-cost steps, one entry per
/// collection row (inner_pass == 0). Imaginary passes carry no violations by
/// construction, so they are excluded here.
inline std::vector<long> cumulative_violations(const std::vector<rl::TrainLogRow>& rows) {
  std::vector<long> series;
  long acc = 0;
  for (const auto& r : rows) {
    if (r.inner_pass != 0) continue;
    acc += r.violations;
    series.push_back(acc);
  }
  return series;
}

/// Trailing moving average with a window that saturates at the series start.
inline std::vector<double> moving_average(const std::vector<double>& xs, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be positive");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= static_cast<std::size_t>(window)) acc -= xs[i - window];
    out[i] = acc / std::min<std::size_t>(i + 1, window);
  }
  return out;
}

/// Operationalized convergence point: the first index after which the
/// 10-sample moving average of the series changes by less than 2% (relative,
/// with an absolute floor) for 20 consecutive samples; the last index when
/// that never happens (budget exhaustion).
inline std::size_t convergence_index(const std::vector<double>& series, int window = 10,
                                     double rel_tol = 0.02, int hold = 20) {
  if (series.empty()) throw std::invalid_argument("convergence_index: empty series");
  const auto ma = moving_average(series, window);
  int quiet = 0;
  for (std::size_t i = 1; i < ma.size(); ++i) {
    const double rel = std::abs(ma[i] - ma[i - 1]) / std::max(std::abs(ma[i - 1]), 1e-8);
    quiet = rel < rel_tol ? quiet + 1 : 0;
    if (quiet >= hold) return i - hold;
  }
  return series.size() - 1;
}

/// Elementwise division by a positive baseline scalar.
inline std::vector<double> normalize_against_baseline(const std::vector<double>& series,
                                                      double baseline,
                                                      const std::string& baseline_name) {
  if (!(baseline > 0.0))
    throw std::invalid_argument("normalize_against_baseline: missing or non-positive baseline (" +
                                baseline_name + " must be a completed unconstrained-PPO run)");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = series[i] / baseline;
  return out;
}

/// Spearman rank correlation with average ranks on ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("spearman: need two same-length series");
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty series");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty series");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace saferl::exp
