#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "saferl/core/types.hpp"

namespace saferl {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpProblem {
  // maximize c'x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  x >= 0
  Mat a_eq;
  Vec b_eq;
  Mat a_ub;
  Vec b_ub;
  Vec c;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double objective = 0.0;
};

namespace detail {

/// Dense two-phase tableau simplex with Bland's rule. Intended for the
/// desk-scale problems in this project (tens of variables); no effort is
/// made to exploit sparsity.
class SimplexTableau {
 public:
  SimplexTableau(const Mat& a, const Vec& b)
      : m_(static_cast<int>(a.rows())), n_(static_cast<int>(a.cols())) {
    t_.resize(m_ + 1, n_ + m_ + 1);
    t_.setZero();
    basis_.resize(m_);
    // Constraint rows, artificials as the starting basis.
    for (int i = 0; i < m_; ++i) {
      double sign = b[i] < 0.0 ? -1.0 : 1.0;
      t_.block(i, 0, 1, n_) = sign * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, n_ + m_) = sign * b[i];
      basis_[i] = n_ + i;
    }
  }

  // Phase 1: minimize the sum of artificials. Returns the residual sum,
  // which is ~0 iff the constraints are feasible.
  double phase1() {
    t_.row(m_).setZero();
    for (int j = n_; j < n_ + m_; ++j) t_(m_, j) = -1.0;
    for (int i = 0; i < m_; ++i) t_.row(m_) += t_.row(i);  // price out the basis
    iterate(n_ + m_);
    return t_(m_, n_ + m_);  // objective row rhs carries -z = sum of artificials
  }

  // After a feasible phase 1, remove artificials from the basis where
  // possible; rows that cannot pivot are redundant and are zeroed out.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      int pivot_col = -1;
      for (int j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > kTol) {
          pivot_col = j;
          break;
        }
      }
      if (pivot_col >= 0) {
        pivot(i, pivot_col);
      } else {
        t_.row(i).setZero();  // redundant constraint
      }
    }
  }

  double phase2(const Vec& c) {
    t_.row(m_).setZero();
    t_.block(m_, 0, 1, n_) = c.transpose();
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_ && std::abs(t_(m_, basis_[i])) > 0.0) {
        t_.row(m_) -= t_(m_, basis_[i]) * t_.row(i);
      }
    }
    iterate(n_);  // artificial columns excluded from pricing
    return -t_(m_, n_ + m_);  // rhs cell holds -z
  }

  Vec solution() const {
    Vec x = Vec::Zero(n_);
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) x[basis_[i]] = t_(i, n_ + m_);
    }
    return x;
  }

  bool unbounded() const { return unbounded_; }

 private:
  static constexpr double kTol = 1e-9;

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i <= m_; ++i) {
      if (i == row) continue;
      double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  void iterate(int num_cols) {
    const int max_iter = 200 * (m_ + n_ + 16);
    for (int iter = 0; iter < max_iter; ++iter) {
      // Bland: entering column = smallest index with positive reduced cost.
      int col = -1;
      for (int j = 0; j < num_cols; ++j) {
        if (t_(m_, j) > kTol) {
          col = j;
          break;
        }
      }
      if (col < 0) return;  // optimal
      int row = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (t_(i, col) > kTol) {
          double ratio = t_(i, n_ + m_) / t_(i, col);
          if (ratio < best - kTol ||
              (ratio < best + kTol && (row < 0 || basis_[i] < basis_[row]))) {
            best = ratio;
            row = i;
          }
        }
      }
      if (row < 0) {
        unbounded_ = true;
        return;
      }
      pivot(row, col);
    }
    throw std::runtime_error("simplex: iteration limit exceeded");
  }

  int m_, n_;
  Mat t_;
  std::vector<int> basis_;
  bool unbounded_ = false;
};

}  // namespace detail

inline LpSolution solve_lp(const LpProblem& p) {
  const int n = static_cast<int>(p.c.size());
  const int me = static_cast<int>(p.a_eq.rows());
  const int mu = static_cast<int>(p.a_ub.rows());
  if (me > 0 && p.a_eq.cols() != n) throw std::invalid_argument("solve_lp: a_eq column mismatch");
  if (mu > 0 && p.a_ub.cols() != n) throw std::invalid_argument("solve_lp: a_ub column mismatch");

  // Slack variables turn inequality rows into equalities.
  Mat a(me + mu, n + mu);
  a.setZero();
  Vec b(me + mu);
  if (me > 0) {
    a.block(0, 0, me, n) = p.a_eq;
    b.head(me) = p.b_eq;
  }
  for (int i = 0; i < mu; ++i) {
    a.block(me + i, 0, 1, n) = p.a_ub.row(i);
    a(me + i, n + i) = 1.0;
    b[me + i] = p.b_ub[i];
  }
  Vec c = Vec::Zero(n + mu);
  c.head(n) = p.c;

  detail::SimplexTableau tab(a, b);
  LpSolution out;
  if (tab.phase1() > 1e-7) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  tab.drive_out_artificials();
  double obj = tab.phase2(c);
  if (tab.unbounded()) {
    out.status = LpStatus::Unbounded;
    return out;
  }
  out.status = LpStatus::Optimal;
  out.x = tab.solution().head(n);
  out.objective = obj;
  return out;
}

}  // namespace saferl
