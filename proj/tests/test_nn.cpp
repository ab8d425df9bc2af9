#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "saferl/nn/adam.hpp"
#include "saferl/nn/mlp.hpp"
#include "saferl/nn/serialize.hpp"
#include "test_util.hpp"

using namespace saferl;
using namespace saferl::nn;

namespace {

MlpParams identity_layer() {
  MlpParams p;
  p.layer_sizes = {2, 2};
  p.weights = {Mat::Identity(2, 2)};
  p.biases = {Vec::Zero(2)};
  return p;
}

}  // namespace

TEST_CASE("forward: single linear layer with identity weights") {
  MlpParams p = identity_layer();
  Vec x(2);
  x << 1, 2;
  Vec y = forward(p, x);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
}

TEST_CASE("forward: all-zero parameters give the zero vector") {
  Rng rng(3);
  MlpParams p = make_mlp({4, 8, 3}, rng, 0.0);
  Vec x(4);
  x << -1, 2, 0.5, 9;
  CHECK(forward(p, x).isZero(0.0));
}

TEST_CASE("forward: deterministic and pure") {
  Rng rng(11);
  MlpParams p = make_mlp({3, 16, 16, 2}, rng);
  Vec before = flatten(p);
  Vec x(3);
  x << 0.3, -1.2, 2.0;
  Vec y1 = forward(p, x);
  Vec y2 = forward(p, x);
  CHECK(y1 == y2);  // bitwise
  CHECK(flatten(p) == before);
}

TEST_CASE("forward: dimension mismatch raises a shape error") {
  Rng rng(1);
  MlpParams p = make_mlp({3, 4, 1}, rng);
  Vec x(5);
  x.setZero();
  CHECK_THROWS_AS(forward(p, x), std::invalid_argument);
}

TEST_CASE("forward: hidden tanh activations stay inside (-1, 1)") {
  Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    MlpParams p = make_mlp({3, 8, 8, 2}, rng, 3.0);
    Mat x(3, 5);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-5, 5);
    ForwardTrace tr;
    forward_batch(p, x, &tr);
    for (int l = 1; l <= 2; ++l) {
      CHECK(tr.acts[l].maxCoeff() < 1.0);
      CHECK(tr.acts[l].minCoeff() > -1.0);
    }
  }
}

TEST_CASE("gradient: sum of squared parameters") {
  Rng rng(2);
  MlpParams p = make_mlp({2, 3, 1}, rng);
  Vec theta = Vec::Ones(param_count(p));
  unflatten(theta, p);
  // L(theta) = theta' theta has gradient 2 theta; check the analytic form and
  // the finite-difference oracle agree on it.
  auto loss = [&](const Vec& t) { return t.squaredNorm(); };
  Vec analytic = 2.0 * theta;
  Vec fd = test_util::finite_difference(loss, theta);
  CHECK(test_util::all_rel_close(analytic, fd));
  for (Eigen::Index i = 0; i < analytic.size(); ++i) CHECK(analytic[i] == 2.0);
}

TEST_CASE("gradient: constant loss is zero") {
  Rng rng(4);
  MlpParams p = make_mlp({2, 4, 2}, rng);
  auto loss = [](const Vec&) { return 3.5; };
  Vec fd = test_util::finite_difference(loss, flatten(p));
  CHECK(fd.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gradient: backprop matches central finite differences on MSE") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const int in = 1 + rng.below_int(4);
    const int hid = 2 + rng.below_int(6);
    const int out = 1 + rng.below_int(3);
    const int batch = 1 + rng.below_int(4);
    MlpParams p = make_mlp({in, hid, out}, rng);
    Mat x(in, batch), y(out, batch);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2, 2);
    for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-2, 2);

    Vec analytic;
    mse_loss_grad(p, x, y, &analytic);

    MlpParams probe = p;
    auto loss = [&](const Vec& t) {
      unflatten(t, probe);
      return mse_loss_grad(probe, x, y, nullptr);
    };
    Vec fd = test_util::finite_difference(loss, flatten(p));
    CHECK(test_util::all_rel_close(analytic, fd, 1e-4, 1e-7));
  }
}

TEST_CASE("gradient: non-finite loss reports the offending value") {
  MlpParams p = identity_layer();
  p.weights[0](0, 0) = 1e308;
  Mat x(2, 1);
  x << 1e12, 0;
  Mat y = Mat::Zero(2, 1);
  CHECK_THROWS_AS(mse_loss_grad(p, x, y, nullptr), std::runtime_error);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Vec params(3);
  params << 1, -2, 0.5;
  Vec before = params;
  AdamState st = make_adam(3, 1e-3);
  for (int i = 0; i < 10; ++i) adam_step(params, Vec::Zero(3), st);
  CHECK(params == before);
  CHECK(st.step == 10);
}

TEST_CASE("adam: constant positive gradient decreases a scalar parameter monotonically") {
  Vec params(1);
  params << 1.0;
  AdamState st = make_adam(1, 1e-2);
  Vec g(1);
  g << 2.5;
  double prev = params[0];
  for (int i = 0; i < 200; ++i) {
    adam_step(params, g, st);
    CHECK(params[0] < prev);
    prev = params[0];
  }
}

TEST_CASE("adam: quadratic bowl converges to the minimizer") {
  // L(x) = (x - 3)^2, minimizer x* = 3
  Vec x(1);
  x << 0.0;
  AdamState st = make_adam(1, 1e-2);
  for (int i = 0; i < 1000; ++i) {
    Vec g(1);
    g << 2.0 * (x[0] - 3.0);
    adam_step(x, g, st);
  }
  CHECK(std::abs(x[0] - 3.0) < 1e-3);
}

TEST_CASE("adam: shape mismatch raises") {
  Vec params(3);
  params.setZero();
  AdamState st = make_adam(2, 1e-3);
  CHECK_THROWS_AS(adam_step(params, Vec::Zero(3), st), std::invalid_argument);
}

TEST_CASE("serialize: parameter checkpoints round-trip bit-exactly") {
  Rng rng(9);
  MlpParams p = make_mlp({5, 7, 3}, rng);
  auto j = to_json(p);
  MlpParams q = mlp_from_json(j);
  CHECK(flatten(p) == flatten(q));
  CHECK(q.layer_sizes == p.layer_sizes);

  AdamState st = make_adam(11, 3e-4);
  Vec params = Vec::Random(11), grad = Vec::Random(11);
  adam_step(params, grad, st);
  AdamState st2 = adam_from_json(to_json(st));
  CHECK(st2.m == st.m);
  CHECK(st2.v == st.v);
  CHECK(st2.step == st.step);
  CHECK(st2.lr == st.lr);
}

TEST_CASE("serialize: version and shape validation") {
  Rng rng(13);
  MlpParams p = make_mlp({2, 2}, rng);
  auto j = to_json(p);
  j["format"] = 999;
  CHECK_THROWS_AS(mlp_from_json(j), std::runtime_error);
}
