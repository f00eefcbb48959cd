#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relnet/autodiff.hpp"
#include "relnet/rng.hpp"

using namespace relnet;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("matmul identity leaves the matrix unchanged") {
  Rng rng(11);
  Var m = constant(random_tensor({3, 3}, rng));
  Var out = matmul(constant(Tensor::identity(3)), m);
  for (int64_t i = 0; i < 9; ++i) CHECK(out.value()[i] == doctest::Approx(m.value()[i]));
}

TEST_CASE("matmul hand example") {
  Var a = constant(Tensor({2, 2}, {1, 2, 3, 4}));
  Var b = constant(Tensor({2, 1}, {1, 1}));
  Var c = matmul(a, b);
  CHECK(c.value().at(0, 0) == doctest::Approx(3.0));
  CHECK(c.value().at(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul by zeros annihilates") {
  Rng rng(5);
  Var m = constant(random_tensor({2, 2}, rng));
  Var out = matmul(constant(Tensor::zeros({2, 2})), m);
  for (int64_t i = 0; i < 4; ++i) CHECK(out.value()[i] == 0.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Var a = constant(Tensor::zeros({2, 3}));
  Var b = constant(Tensor::zeros({4, 5}));
  CHECK_THROWS_WITH_AS(matmul(a, b), "matmul: shape mismatch [2x3] vs [4x5]",
                       std::invalid_argument);
}

TEST_CASE("softmax_rows on uniform row") {
  Var out = softmax_rows(constant(Tensor({1, 3}, {0, 0, 0})));
  for (int j = 0; j < 3; ++j) CHECK(out.value().at(0, j) == doctest::Approx(1.0 / 3));
}

TEST_CASE("softmax_rows survives large inputs via max subtraction") {
  Var out = softmax_rows(constant(Tensor({1, 2}, {1000, 1000})));
  CHECK(out.value().at(0, 0) == doctest::Approx(0.5));
  CHECK(out.value().at(0, 1) == doctest::Approx(0.5));
  CHECK(out.value().all_finite());
}

TEST_CASE("softmax_rows hand example [0, ln 3]") {
  Var out = softmax_rows(constant(Tensor({1, 2}, {0.0, std::log(3.0)})));
  CHECK(out.value().at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(out.value().at(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax_rows rows sum to 1 within 1e-12 on random tensors") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = rng.uniform_int(1, 6), n = rng.uniform_int(1, 6);
    Var out = softmax_rows(constant(random_tensor({m, n}, rng, -50.0, 50.0)));
    for (int i = 0; i < m; ++i) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        CHECK(out.value().at(i, j) >= 0.0);
        sum += out.value().at(i, j);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("relu clamps negatives and keeps positives") {
  Var out = relu(constant(Tensor({3}, {-0.5, 0.0, 2.5})));
  CHECK(out.value()[0] == 0.0);
  CHECK(out.value()[1] == 0.0);
  CHECK(out.value()[2] == 2.5);
  Var out2 = relu(constant(Tensor({3}, {-1, 0, 1})));
  CHECK(out2.value()[0] == 0.0);
  CHECK(out2.value()[1] == 0.0);
  CHECK(out2.value()[2] == 1.0);
}

TEST_CASE("backward of sum(W x) has outer-product structure") {
  // loss = sum(W x) with x fixed: dL/dW[i][j] = x[j].
  Var w(Tensor({2, 2}, {0.3, -0.7, 1.1, 0.2}), true);
  Var x = constant(Tensor({2, 1}, {2.0, -3.0}));
  Var loss = sum_all(matmul(w, x));
  backward(loss);
  CHECK(w.grad().at(0, 0) == doctest::Approx(2.0));
  CHECK(w.grad().at(0, 1) == doctest::Approx(-3.0));
  CHECK(w.grad().at(1, 0) == doctest::Approx(2.0));
  CHECK(w.grad().at(1, 1) == doctest::Approx(-3.0));
}

TEST_CASE("backward with loss independent of a parameter leaves zero grad") {
  Var w(Tensor({2, 2}, {1, 2, 3, 4}), true);
  Var unrelated(Tensor({2}, {5, 6}), true);
  Var loss = sum_all(mul(unrelated, unrelated));
  backward(loss);
  for (int64_t i = 0; i < 4; ++i) CHECK(w.grad()[i] == 0.0);
}

TEST_CASE("backward BCE matches the s0/(1 - s0 s1) identity for label 0") {
  // L = -log(1 - s0*s1) => dL/ds1 = s0 / (1 - s0*s1)
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const double s0v = rng.uniform(0.01, 0.95);
    const double s1v = rng.uniform(0.01, 0.95);
    Var s1(Tensor::scalar(s1v), true);
    Var s0 = constant(Tensor::scalar(s0v));
    Var loss = neg(vlog(add_scalar(neg(mul(s0, s1)), 1.0)));
    s1.zero_grad();
    backward(loss);
    CHECK(s1.grad()[0] == doctest::Approx(s0v / (1.0 - s0v * s1v)).epsilon(1e-12));
  }
}

TEST_CASE("backward sums gradients over repeated paths") {
  Var w(Tensor({2}, {0.5, -1.5}), true);
  // loss = sum(w) + sum(w*w): dL/dw = 1 + 2w, both paths contribute
  Var loss = add(sum_all(w), sum_all(mul(w, w)));
  backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(1.0 + 2.0 * 0.5));
  CHECK(w.grad()[1] == doctest::Approx(1.0 + 2.0 * -1.5));
}

TEST_CASE("backward rejects non-scalar loss") {
  Var w(Tensor({2}, {1, 2}), true);
  Var y = mul(w, w);
  CHECK_THROWS_AS(backward(y), std::invalid_argument);
}

TEST_CASE("grad_check: quadratic f(x) = x^T x") {
  Rng rng(3);
  Var x(random_tensor({5}, rng), true);
  auto f = [&]() { return sum_all(mul(x, x)); };
  GradCheckReport report = grad_check(f, {{"x", x}}, 1e-5, 1e-8);
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("grad_check: constant function has zero gradient on both sides") {
  Var x(Tensor({3}, {1, 2, 3}), true);
  auto f = [&]() { return constant(Tensor::scalar(4.0)); };
  GradCheckReport report = grad_check(f, {{"x", x}}, 1e-5, 1e-10);
  CHECK(report.pass);
  CHECK(report.max_rel_err == 0.0);
}

TEST_CASE("grad_check covers the composite op set") {
  Rng rng(19);
  Var a(random_tensor({3, 4}, rng), true);
  Var b(random_tensor({4, 2}, rng), true);
  Var bias(random_tensor({1, 2}, rng), true);
  Var col(random_tensor({3, 1}, rng), true);
  auto f = [&]() {
    Var h = add_row_broadcast(matmul(a, b), bias);
    h = mul_col_broadcast(sigmoid(h), col);
    h = softmax_rows(add(h, vexp(scale(h, 0.3))));
    Var g = huber(sub_col_broadcast(h, col));
    Var parts = concat_cols({g, relu(h)});
    return mean_all(mul(parts, parts));
  };
  GradCheckReport report = grad_check(
      f, {{"a", a}, {"b", b}, {"bias", bias}, {"col", col}}, 1e-5, 1e-7);
  CHECK(report.pass);
}

TEST_CASE("grad_check covers log, clamp, pick, row_sum, transpose") {
  Rng rng(23);
  Var a(random_tensor({4, 3}, rng, 0.1, 2.0), true);
  auto f = [&]() {
    Var t = transpose(a);                       // [3 x 4]
    Var p = pick(vlog(t), {0, 5, 7, 11});
    Var c = clamp(row_sum(t), -10.0, 10.0);
    return add(sum_all(p), mean_all(c));
  };
  GradCheckReport report = grad_check(f, {{"a", a}}, 1e-6, 1e-7);
  CHECK(report.pass);
}

TEST_CASE("safe_col_normalize: zero column stays zero, grads pass elsewhere") {
  Tensor t({3, 2});
  t.at(0, 0) = 1.0;
  t.at(1, 0) = 3.0;
  t.at(2, 0) = 0.0;  // column 1 all zero
  Var out = safe_col_normalize(constant(t));
  CHECK(out.value().at(0, 0) == doctest::Approx(0.25));
  CHECK(out.value().at(1, 0) == doctest::Approx(0.75));
  for (int i = 0; i < 3; ++i) CHECK(out.value().at(i, 1) == 0.0);

  Rng rng(31);
  Var x(random_tensor({4, 3}, rng, 0.05, 1.0), true);
  auto f = [&]() {
    Var y = safe_col_normalize(x);
    return sum_all(mul(y, y));
  };
  GradCheckReport report = grad_check(f, {{"x", x}}, 1e-6, 1e-7);
  CHECK(report.pass);
}

TEST_CASE("grad_check rejects non-positive step") {
  Var x(Tensor({1}, {1.0}), true);
  auto f = [&]() { return sum_all(x); };
  CHECK_THROWS_AS(grad_check(f, {{"x", x}}, 0.0, 1e-4), std::invalid_argument);
}
