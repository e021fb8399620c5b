#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eden/gradcheck.hpp"
#include "eden/matrix.hpp"
#include "eden/rng.hpp"
#include "eden/tape.hpp"

using eden::Rng;
using namespace eden::num;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Matrix m(r, c);
  for (auto& x : m.v) x = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("matmul basics") {
  const Matrix a = Matrix::of(2, 2, {1, 2, 3, 4});
  SUBCASE("identity") {
    const Matrix c = matmul(Matrix::identity(2), a);
    CHECK(c.v == a.v);
  }
  SUBCASE("hand product") {
    const Matrix c = matmul(a, Matrix::of(2, 1, {1, 1}));
    CHECK(c(0, 0) == 3.0);
    CHECK(c(1, 0) == 7.0);
  }
  SUBCASE("zero matrix") {
    const Matrix c = matmul(Matrix::zeros(2, 2), a);
    for (double x : c.v) CHECK(x == 0.0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(matmul(a, Matrix::zeros(3, 1)), std::invalid_argument);
  }
}

TEST_CASE("elementwise basics") {
  CHECK(sigmoid(Matrix::of(1, 1, {0})).v[0] == 0.5);
  CHECK(tanh_m(Matrix::of(1, 1, {0})).v[0] == 0.0);
  SUBCASE("sigmoid approaches 1 monotonically") {
    double prev = 0.5;
    for (double x : {1.0, 2.0, 5.0, 10.0, 20.0}) {
      const double s = sigmoid(Matrix::of(1, 1, {x})).v[0];
      CHECK(s > prev);
      CHECK(s <= 1.0);
      prev = s;
    }
    CHECK(prev > 1.0 - 1e-8);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(add(Matrix::zeros(2, 2), Matrix::zeros(2, 1)), std::invalid_argument);
  }
  SUBCASE("stable at extreme inputs") {
    CHECK(std::isfinite(sigmoid(Matrix::of(1, 1, {-10000.0})).v[0]));
    CHECK(std::isfinite(sigmoid(Matrix::of(1, 1, {10000.0})).v[0]));
  }
}

TEST_CASE("backward: x squared at 3 gives 6") {
  Tape tape;
  const auto x = tape.input(Matrix::of(1, 1, {3.0}), true);
  const auto y = tape.mul(x, x);
  tape.backward(y);
  CHECK(tape.grad(x).v[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("backward: sigmoid'(0) = 0.25") {
  Tape tape;
  const auto x = tape.input(Matrix::of(1, 1, {0.0}), true);
  const auto y = tape.sigmoid(x);
  tape.backward(y);
  CHECK(tape.grad(x).v[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar output and foreign ids") {
  Tape tape;
  const auto x = tape.input(Matrix::zeros(2, 1), true);
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
  CHECK_THROWS_AS(tape.backward(999), std::invalid_argument);
}

TEST_CASE("taped evaluation is bit-identical to untaped") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(3, 4, rng);
    const Matrix b = random_matrix(4, 2, rng);
    const Matrix c = random_matrix(3, 2, rng);
    const Matrix untaped = tanh_m(add(matmul(a, b), c));

    Tape tape;
    const auto ta = tape.input(a, true);
    const auto tb = tape.input(b, true);
    const auto tc = tape.input(c, false);
    const auto out = tape.tanh(tape.add(tape.matmul(ta, tb), tc));
    CHECK(tape.value(out).v == untaped.v);
  }
}

TEST_CASE("every primitive passes finite differences on random inputs") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a = random_matrix(3, 3, rng);
    Matrix b = random_matrix(3, 3, rng);
    Matrix m2 = random_matrix(3, 2, rng);

    // a composite touching matmul, add, sub, mul, scale, const ops, sigmoid,
    // tanh, log, clamp, concat, entry and sum
    auto build = [&]() {
      Tape tape;
      const auto ia = tape.input(a, true);
      const auto ib = tape.input(b, true);
      const auto im = tape.input(m2, true);
      const auto prod = tape.matmul(tape.add(ia, tape.scale(ib, 0.5)), im);
      const auto s = tape.sigmoid(prod);
      const auto t = tape.tanh(tape.sub(prod, im));
      const auto u = tape.mul(s, t);
      const auto lg = tape.log(tape.add_const(tape.clamp(u, -0.9, 0.9), 1.1));
      const auto cat = tape.concat_rows(lg, tape.rsub_const(1.0, u));
      const auto total = tape.add(tape.sum(cat), tape.entry(cat, 1, 1));
      return std::pair(std::move(tape), total);
    };

    auto [tape, out] = build();
    tape.backward(out);
    const std::vector<Matrix> analytic = {tape.grad(0), tape.grad(1), tape.grad(2)};

    const auto f = [&]() {
      auto [t2, o2] = build();
      return t2.value(o2).v[0];
    };
    const double err = grad_check(f, {&a, &b, &m2}, analytic, 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("grad_check: linear function at machine precision") {
  Rng rng(3);
  Matrix x = random_matrix(4, 1, rng);
  const Matrix w = random_matrix(1, 4, rng);
  const auto f = [&]() { return matmul(w, x).v[0]; };
  const Matrix analytic = transpose(w);
  CHECK(grad_check(f, {&x}, {analytic}, 1e-5) < 1e-8);
}

TEST_CASE("grad_check flags a corrupted gradient (negative control)") {
  Rng rng(5);
  Matrix x = random_matrix(4, 1, rng);
  const Matrix w = random_matrix(1, 4, rng);
  const auto f = [&]() { return matmul(w, x).v[0]; };
  Matrix corrupted = transpose(w);
  corrupted.v[2] += 0.1;
  CHECK(grad_check(f, {&x}, {corrupted}, 1e-5) > 1e-2);
}

TEST_CASE("grad_check rejects non-finite functions and bad eps") {
  Matrix x = Matrix::of(1, 1, {0.0});
  const auto f = [&]() { return std::log(x.v[0]); };  // NaN below zero
  CHECK_THROWS(grad_check(f, {&x}, {Matrix::of(1, 1, {0.0})}, 1e-5));
  const auto g = [&]() { return x.v[0]; };
  CHECK_THROWS_AS(grad_check(g, {&x}, {Matrix::of(1, 1, {1.0})}, 0.0), std::invalid_argument);
}

TEST_CASE("forward outputs stay finite for bounded params") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix w = random_matrix(5, 5, rng, -10.0, 10.0);
    const Matrix x = random_matrix(5, 1, rng, -10.0, 10.0);
    Tape tape;
    const auto iw = tape.input(w, true);
    const auto ix = tape.input(x, false);
    const auto h = tape.tanh(tape.matmul(iw, ix));
    const auto s = tape.sigmoid(tape.matmul(iw, h));
    const auto out = tape.sum(tape.log(s));
    CHECK(tape.value(out).all_finite());
    tape.backward(out);
    CHECK(tape.grad(iw).all_finite());
  }
}
