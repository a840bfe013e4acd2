#include <doctest.h>

#include <cmath>
#include <random>

#include "factscribe/errors.hpp"
#include "factscribe/grad_check.hpp"
#include "factscribe/tensor.hpp"

using namespace factscribe;

namespace {

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (auto row : rows) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Reduces any output to a scalar through fixed random weights so every entry
// of the output carries gradient.
Var project(Tape& tape, Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = tape.constant(random_matrix(out.rows(), out.cols(), rng));
  return sum(mul(out, w));
}

}  // namespace

TEST_CASE("matmul values and shape errors") {
  Tape tape;
  Var a = tape.constant(mat({{1, 2}, {3, 4}}));
  CHECK(matmul(a, tape.constant(Matrix::Identity(2, 2))).value() == mat({{1, 2}, {3, 4}}));
  CHECK(matmul(a, tape.constant(mat({{5}, {6}}))).value() == mat({{17}, {39}}));

  Var b = tape.constant(Matrix::Zero(2, 3));
  try {
    matmul(b, b);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("masked softmax") {
  Tape tape;
  Var u = masked_softmax(tape.constant(Matrix::Zero(3, 1)), {true, true, true});
  for (int i = 0; i < 3; ++i) CHECK(u.value()(i, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Var v = masked_softmax(tape.constant(mat({{1}, {2}, {50}})), {true, true, false});
  CHECK(v.value()(0, 0) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  CHECK(v.value()(1, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(v.value()(2, 0) == 0.0);

  // Row vectors are accepted and keep their orientation.
  Var r = masked_softmax(tape.constant(mat({{1, 2, 3}})), {false, true, true});
  CHECK(r.rows() == 1);
  CHECK(r.value()(0, 0) == 0.0);

  CHECK_THROWS_AS(masked_softmax(tape.constant(Matrix::Zero(2, 1)), {false, false}), ContractError);
  CHECK_THROWS_AS(masked_softmax(tape.constant(Matrix::Zero(2, 1)), {true}), ShapeError);

  // Large energies stay finite thanks to max subtraction.
  Var big = masked_softmax(tape.constant(mat({{1000}, {1001}})), {true, true});
  CHECK(std::isfinite(big.value()(0, 0)));
  CHECK(big.value()(1, 0) == doctest::Approx(0.7310585786300049));
}

TEST_CASE("masked softmax is a distribution for random inputs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 12);
    Vector v = random_matrix(n, 1, rng, -30, 30);
    Mask mask(static_cast<std::size_t>(n));
    for (auto&& m : mask) m = rng() % 3 != 0;
    mask[rng() % static_cast<std::size_t>(n)] = true;
    const Vector p = masked_softmax_values(v, mask);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    for (Index i = 0; i < n; ++i) {
      CHECK(p(i) >= 0.0);
      if (!mask[static_cast<std::size_t>(i)]) CHECK(p(i) == 0.0);
    }
  }
}

TEST_CASE("backward on small closed forms") {
  {
    Tensor x("x", mat({{1}, {2}, {3}}));
    Tape tape;
    tape.backward(sum(tape.leaf(x)));
    CHECK(x.grad() == Matrix::Ones(3, 1));
  }
  {
    Tensor x("x", mat({{3}}));
    Tape tape;
    Var v = tape.leaf(x);
    tape.backward(mul(v, v));
    CHECK(x.grad()(0, 0) == doctest::Approx(6.0));
  }
  {
    Tensor z("z", Matrix::Zero(2, 1));
    Tape tape;
    tape.backward(nll(masked_softmax(tape.leaf(z), {true, true}), 0));
    CHECK(z.grad()(0, 0) == doctest::Approx(-0.5));
    CHECK(z.grad()(1, 0) == doctest::Approx(0.5));
  }
  {
    // Parameters the loss never reaches keep a zero gradient.
    Tensor used("used", mat({{2}})), unused("unused", mat({{5}}));
    unused.grad().setConstant(0.0);
    Tape tape;
    tape.leaf(unused);
    tape.backward(scale(tape.leaf(used), 3.0));
    CHECK(used.grad()(0, 0) == 3.0);
    CHECK(unused.grad()(0, 0) == 0.0);
  }
  {
    Tape tape;
    Var m = tape.constant(Matrix::Ones(2, 2));
    CHECK_THROWS_AS(tape.backward(m), ContractError);
  }
}

TEST_CASE("grad_check closed forms") {
  Tensor x("x", mat({{1}}));
  std::vector<Tensor*> params{&x};
  auto square = [&](Tape& t) {
    Var v = t.leaf(x);
    return mul(v, v);
  };
  CHECK(grad_check(square, params, 1e-5).max_relative_error < 1e-8);
  auto constant = [&](Tape& t) {
    t.leaf(x);
    return t.constant(mat({{4}}));
  };
  const auto r = grad_check(constant, params, 1e-5);
  CHECK(r.max_relative_error == 0.0);
  CHECK(r.analytic == 0.0);
  CHECK_THROWS_AS(grad_check(square, params, 0.0), ContractError);
}

TEST_CASE("every primitive passes grad_check") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 5; ++trial) {
    const Index m = 1 + static_cast<Index>(rng() % 8), k = 1 + static_cast<Index>(rng() % 8),
                n = 1 + static_cast<Index>(rng() % 8);
    Tensor a("a", random_matrix(m, k, rng));
    Tensor b("b", random_matrix(k, n, rng));
    Tensor c("c", random_matrix(m, k, rng));
    Tensor col("col", random_matrix(m, 1, rng));
    Tensor table("table", random_matrix(6, k, rng));
    std::vector<Tensor*> ab{&a, &b}, ac{&a, &c}, a_only{&a}, a_col{&a, &col}, tab{&table};
    const double h = 1e-6;
    const std::uint64_t s = rng();

    CHECK(grad_check([&](Tape& t) { return project(t, matmul(t.leaf(a), t.leaf(b)), s); }, ab, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, t.leaf(a) + t.leaf(c), s); }, ac, h).max_relative_error <
          1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, t.leaf(a) - t.leaf(c), s); }, ac, h).max_relative_error <
          1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, mul(t.leaf(a), t.leaf(c)), s); }, ac, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, scale(t.leaf(a), -1.7), s); }, a_only, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, add_column(t.leaf(a), t.leaf(col)), s); }, a_col, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, tanh(t.leaf(a)), s); }, a_only, h).max_relative_error <
          1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, sigmoid(t.leaf(a)), s); }, a_only, h).max_relative_error <
          1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, vconcat({t.leaf(a), t.leaf(c)}), s); }, ac, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, hconcat({t.leaf(a), t.leaf(col)}), s); }, a_col, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, slice_rows(t.leaf(a), 0, (m + 1) / 2), s); }, a_only, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, slice_cols(t.leaf(a), k / 2, k - k / 2), s); }, a_only, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, row_mean(t.leaf(a)), s); }, a_only, h).max_relative_error <
          1e-6);
    CHECK(grad_check([&](Tape& t) { return project(t, transpose(t.leaf(a)), s); }, a_only, h)
              .max_relative_error < 1e-6);
    const std::vector<int> ids{3, 0, 3, 5};
    CHECK(grad_check([&](Tape& t) { return project(t, embedding(t.leaf(table), ids), s); }, tab, h)
              .max_relative_error < 1e-6);
    CHECK(grad_check(
              [&](Tape& t) {
                const std::vector<int> lengths{1, 3};
                return project(t, segment_sum(embedding(t.leaf(table), ids), lengths), s);
              },
              tab, h)
              .max_relative_error < 1e-6);
    Mask mask(static_cast<std::size_t>(m), true);
    if (m > 1) mask[0] = false;
    CHECK(grad_check([&](Tape& t) { return project(t, masked_softmax(column(t.leaf(a), 0), mask), s); }, a_only,
                     h)
              .max_relative_error < 1e-6);
    CHECK(grad_check(
              [&](Tape& t) {
                return nll(masked_softmax(column(t.leaf(a), 0), mask), static_cast<Index>(m - 1));
              },
              a_only, h)
              .max_relative_error < 1e-6);

    // ReLU away from its kink.
    Matrix kinkless = random_matrix(m, k, rng);
    for (Index i = 0; i < kinkless.size(); ++i) {
      double& v = kinkless.data()[i];
      if (std::abs(v) < 0.05) v = v < 0 ? -0.5 : 0.5;
    }
    Tensor r("r", kinkless);
    std::vector<Tensor*> r_only{&r};
    CHECK(grad_check([&](Tape& t) { return project(t, relu(t.leaf(r)), s); }, r_only, h).max_relative_error <
          1e-4);
  }
}

TEST_CASE("non-recording tapes compute the same values") {
  std::mt19937_64 rng(3);
  Tensor a("a", random_matrix(4, 3, rng));
  Tensor b("b", random_matrix(3, 2, rng));
  auto forward = [&](Tape& t) { return sum(tanh(matmul(t.leaf(a), t.leaf(b)))); };
  Tape rec(true), inf(false);
  const double x = forward(rec).scalar();
  const double y = forward(inf).scalar();
  CHECK(x == y);
  Tape again(false);
  CHECK(forward(again).scalar() == y);
}

TEST_CASE("gradients accumulate across backward calls") {
  Tensor x("x", mat({{2}}));
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(scale(tape.leaf(x), 1.5), 0.5);
  }
  CHECK(x.grad()(0, 0) == doctest::Approx(1.5));
  x.zero_grad();
  CHECK(x.grad()(0, 0) == 0.0);
}
