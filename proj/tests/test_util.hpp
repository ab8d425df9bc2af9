#pragma once

#include <cmath>
#include <functional>

#include "saferl/core/types.hpp"

namespace test_util {

/// Central-difference gradient oracle (step 1e-5), independent of any
/// analytic path in the library.
inline saferl::Vec finite_difference(const std::function<double(const saferl::Vec&)>& f,
                                     const saferl::Vec& x, double h = 1e-5) {
  saferl::Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    saferl::Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline bool rel_close(double a, double b, double rtol = 1e-4, double atol = 1e-7) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

/// True when every coordinate pair agrees within the relative tolerance
/// (absolute floor covers coordinates that are legitimately ~0).
inline bool all_rel_close(const saferl::Vec& a, const saferl::Vec& b, double rtol = 1e-4,
                          double atol = 1e-7) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!rel_close(a[i], b[i], rtol, atol)) return false;
  return true;
}

}  // namespace test_util
