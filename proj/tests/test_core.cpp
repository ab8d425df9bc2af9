#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "saferl/core/lp.hpp"
#include "saferl/core/rng.hpp"

using namespace saferl;

TEST_CASE("rng: seeded streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(43);
  CHECK(Rng(42).next_u64() != c.next_u64());
}

TEST_CASE("rng: state round-trips mid-stream") {
  Rng a(7);
  for (int i = 0; i < 17; ++i) a.normal();
  const std::string s = a.state();
  Rng b(0);
  b.set_state(s);
  for (int i = 0; i < 50; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("rng: uniform range and below bounds") {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = r.below(7);
    CHECK(k < 7);
  }
}

TEST_CASE("rng: normal moments are sane") {
  Rng r(5);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("lp: inequality-only problem") {
  // max x + y  s.t.  x + 2y <= 4, x <= 2  ->  (2, 1), objective 3
  LpProblem p;
  p.c = Vec(2);
  p.c << 1, 1;
  p.a_eq = Mat::Zero(0, 2);
  p.b_eq = Vec::Zero(0);
  p.a_ub = Mat(2, 2);
  p.a_ub << 1, 2, 1, 0;
  p.b_ub = Vec(2);
  p.b_ub << 4, 2;
  auto s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(s.x[0] == doctest::Approx(2.0));
  CHECK(s.x[1] == doctest::Approx(1.0));
}

TEST_CASE("lp: equality constraint") {
  // max 2x + y  s.t.  x + y = 1  ->  x = 1, objective 2
  LpProblem p;
  p.c = Vec(2);
  p.c << 2, 1;
  p.a_eq = Mat(1, 2);
  p.a_eq << 1, 1;
  p.b_eq = Vec(1);
  p.b_eq << 1;
  p.a_ub = Mat::Zero(0, 2);
  p.b_ub = Vec::Zero(0);
  auto s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective == doctest::Approx(2.0));
  CHECK(s.x[0] == doctest::Approx(1.0));
}

TEST_CASE("lp: infeasible system detected") {
  // x + y = -1 with x, y >= 0
  LpProblem p;
  p.c = Vec(2);
  p.c << 1, 0;
  p.a_eq = Mat(1, 2);
  p.a_eq << 1, 1;
  p.b_eq = Vec(1);
  p.b_eq << -1;
  p.a_ub = Mat::Zero(0, 2);
  p.b_ub = Vec::Zero(0);
  CHECK(solve_lp(p).status == LpStatus::Infeasible);
}

TEST_CASE("lp: unbounded problem detected") {
  LpProblem p;
  p.c = Vec(1);
  p.c << 1;
  p.a_eq = Mat::Zero(0, 1);
  p.b_eq = Vec::Zero(0);
  p.a_ub = Mat::Zero(0, 1);
  p.b_ub = Vec::Zero(0);
  CHECK(solve_lp(p).status == LpStatus::Unbounded);
}

TEST_CASE("lp: negative right-hand sides handled") {
  // max -x  s.t.  -x <= -2  (i.e. x >= 2)  ->  x = 2
  LpProblem p;
  p.c = Vec(1);
  p.c << -1;
  p.a_eq = Mat::Zero(0, 1);
  p.b_eq = Vec::Zero(0);
  p.a_ub = Mat(1, 1);
  p.a_ub << -1;
  p.b_ub = Vec(1);
  p.b_ub << -2;
  auto s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == doctest::Approx(2.0));
  CHECK(s.objective == doctest::Approx(-2.0));
}
