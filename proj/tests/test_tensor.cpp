#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cascade/grad_check.hpp"
#include "cascade/matrix.hpp"
#include "cascade/ops.hpp"
#include "cascade/rng.hpp"

using namespace cascade;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("affine identity and zero-weight cases") {
  Matrix I(2, 2);
  I(0, 0) = I(1, 1) = 1.0;
  Vec b0(2, 0.0);
  CHECK(affine({3.0, 4.0}, I, b0) == Vec{3.0, 4.0});

  Matrix Z(2, 3);
  Vec b{1.0, 2.0};
  CHECK(affine({9.0, -2.0, 5.0}, Z, b) == Vec{1.0, 2.0});
}

TEST_CASE("affine rejects shape mismatches naming both shapes") {
  Matrix W(3, 4);
  Vec b(3, 0.0);
  CHECK_THROWS_WITH_AS(affine({1.0, 2.0}, W, b), doctest::Contains("3x4"),
                       std::invalid_argument);
  Vec bad_b(2, 0.0);
  CHECK_THROWS_AS(affine(Vec(4, 0.0), W, bad_b), std::invalid_argument);
}

TEST_CASE("affine backward matches finite differences on random instances") {
  Rng rng(42, "affine-test");
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t out = 1 + rng.uniform_int(4);
    std::size_t in = 1 + rng.uniform_int(5);
    Matrix W = random_matrix(out, in, rng);
    Vec b = random_vec(out, rng);
    Vec x = random_vec(in, rng);
    Vec u = random_vec(out, rng);  // upstream: loss = dot(u, Wx+b)

    AffineGrads g = affine_backward(x, W, u);

    // check dW
    Vec theta = W.data;
    auto f_w = [&](const Vec& t) {
      Matrix Wt = W;
      Wt.data = t;
      return dot(u, affine(x, Wt, b));
    };
    auto rep = grad_check(f_w, theta, g.dW.data, 1e-5);
    CHECK(rep.max_relative_error < 1e-6);

    // check dx and db
    auto f_x = [&](const Vec& t) { return dot(u, affine(t, W, b)); };
    rep = grad_check(f_x, x, g.dx, 1e-5);
    CHECK(rep.max_relative_error < 1e-6);
    auto f_b = [&](const Vec& t) { return dot(u, affine(x, W, t)); };
    rep = grad_check(f_b, b, g.db, 1e-5);
    CHECK(rep.max_relative_error < 1e-6);
  }
}

TEST_CASE("activation point values") {
  CHECK(sigmoid({0.0})[0] == doctest::Approx(0.5));
  CHECK(tanhv({0.0})[0] == doctest::Approx(0.0));
  CHECK(relu({-3.0})[0] == 0.0);
  CHECK(relu({2.0})[0] == 2.0);
  // sigma'(0) = 0.25
  Vec y = sigmoid({0.0});
  CHECK(sigmoid_backward(y, {1.0})[0] == doctest::Approx(0.25));
}

TEST_CASE("activation backward matches finite differences") {
  Rng rng(7, "act-test");
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng.uniform_int(6);
    Vec x = random_vec(n, rng);
    for (auto& v : x) v *= 2.0;
    Vec u = random_vec(n, rng);

    auto rep = grad_check([&](const Vec& t) { return dot(u, sigmoid(t)); }, x,
                          sigmoid_backward(sigmoid(x), u), 1e-5);
    CHECK(rep.max_relative_error < 1e-6);
    rep = grad_check([&](const Vec& t) { return dot(u, tanhv(t)); }, x,
                     tanhv_backward(tanhv(x), u), 1e-5);
    CHECK(rep.max_relative_error < 1e-6);
    // keep x away from the relu kink
    for (auto& v : x) {
      if (std::fabs(v) < 1e-3) v = 0.5;
    }
    rep = grad_check([&](const Vec& t) { return dot(u, relu(t)); }, x, relu_backward(x, u), 1e-5);
    CHECK(rep.max_relative_error < 1e-6);
  }
}

TEST_CASE("outputs stay finite on finite inputs") {
  Rng rng(3, "finite");
  Vec x{1e8, -1e8, 0.0, 37.5};
  CHECK(all_finite(sigmoid(x)));
  CHECK(all_finite(tanhv(x)));
  CHECK(all_finite(relu(x)));
  Matrix W = random_matrix(3, 4, rng);
  CHECK(all_finite(affine(random_vec(4, rng), W, random_vec(3, rng))));
}

TEST_CASE("dropout rate 0 and eval mode are the identity") {
  Rng rng(1, "dropout");
  Vec x{1.0, 2.0};
  auto r0 = dropout(x, 0.0, Mode::Train, rng);
  CHECK(r0.y == x);
  auto re = dropout(x, 0.5, Mode::Eval, rng);
  CHECK(re.y == x);  // exact identity, not approximate
  CHECK(re.mask == Vec{1.0, 1.0});
}

TEST_CASE("dropout rejects rate >= 1") {
  Rng rng(1, "dropout");
  CHECK_THROWS_AS(dropout({1.0}, 1.0, Mode::Train, rng), std::invalid_argument);
  CHECK_THROWS_AS(dropout({1.0}, 1.5, Mode::Train, rng), std::invalid_argument);
}

TEST_CASE("inverted dropout is unbiased: E[output] ~ x over 1e5 trials") {
  Rng rng(99, "dropout-mc");
  Vec x{1.0, -2.0, 0.5};
  Vec sum(x.size(), 0.0);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    auto r = dropout(x, 0.5, Mode::Train, rng);
    axpy(1.0, r.y, sum);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(sum[i] / trials == doctest::Approx(x[i]).epsilon(0.02));
  }
}

TEST_CASE("dropout backward applies the same mask and scale") {
  Rng rng(5, "dropout-bwd");
  Vec x = random_vec(16, rng);
  auto r = dropout(x, 0.3, Mode::Train, rng);
  Vec u = random_vec(16, rng);
  Vec dx = dropout_backward(r.mask, u);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(dx[i] == u[i] * r.mask[i]);
}

TEST_CASE("grad_check on a quadratic") {
  auto f = [](const Vec& t) { return dot(t, t); };
  Vec theta{1.0, -2.0};
  Vec analytic{2.0, -4.0};
  auto rep = grad_check(f, theta, analytic, 1e-5);
  CHECK(rep.max_relative_error < 1e-8);
  CHECK_FALSE(rep.nonfinite);
}

TEST_CASE("grad_check on a constant reports zero error") {
  auto f = [](const Vec&) { return 3.5; };
  Vec theta{0.2, 0.4, -1.0};
  Vec analytic(3, 0.0);
  auto rep = grad_check(f, theta, analytic, 1e-5);
  CHECK(rep.max_relative_error == 0.0);
}

TEST_CASE("grad_check flags non-finite evaluations with the offending index") {
  auto f = [](const Vec& t) { return t[1] > 0.5 ? std::nan("") : 0.0; };
  Vec theta{0.0, 0.5};
  Vec analytic(2, 0.0);
  auto rep = grad_check(f, theta, analytic, 1e-3);
  CHECK(rep.nonfinite);
  CHECK(rep.worst_parameter_index == 1);
}

TEST_CASE("matvec_t is the transpose of matvec") {
  Rng rng(11, "matvec");
  Matrix W = random_matrix(4, 6, rng);
  Vec x = random_vec(6, rng);
  Vec y = random_vec(4, rng);
  // y^T (W x) == (W^T y)^T x
  CHECK(dot(y, matvec(W, x)) == doctest::Approx(dot(matvec_t(W, y), x)).epsilon(1e-12));
}
