#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "lcs/linalg.hpp"
#include "lcs/rng.hpp"
#include "lcs/tape.hpp"

using namespace lcs::ad;
using lcs::Rng;

namespace {

Mat random_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = 2.0 * rng.unit() - 1.0;
  }
  return m;
}

// Central finite differences of a scalar graph in one leaf.
Mat fd_gradient(const std::function<double(const Mat&)>& f, const Mat& x0,
                double h = 1e-6) {
  Mat g(x0.rows(), x0.cols());
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
      Mat xp = x0, xm = x0;
      xp(i, j) += h;
      xm(i, j) -= h;
      g(i, j) = (f(xp) - f(xm)) / (2.0 * h);
    }
  }
  return g;
}

void check_close(const Mat& a, const Mat& b, double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  CHECK((a - b).norm() <= tol * (1.0 + b.norm()));
}

}  // namespace

TEST_CASE("sum of squares gradient is 2w") {
  Tape tape;
  const Mat w0 = (Mat(3, 1) << 1.0, -2.0, 0.5).finished();
  const Var w = tape.leaf(w0);
  tape.backward(tape.sum_sq(w));
  check_close(tape.adjoint(w), 2.0 * w0, 1e-14);
}

TEST_CASE("matmul and transpose gradients match finite differences") {
  Rng rng(5);
  const Mat a0 = random_matrix(3, 4, rng);
  const Mat b0 = random_matrix(4, 2, rng);
  Tape tape;
  const Var a = tape.leaf(a0);
  const Var b = tape.leaf(b0);
  const Var out = tape.sum_sq(tape.matmul(tape.transpose(a), tape.matmul(a, b)));
  tape.backward(out);

  auto loss_a = [&](const Mat& am) {
    return (am.transpose() * (am * b0)).squaredNorm();
  };
  auto loss_b = [&](const Mat& bm) {
    return (a0.transpose() * (a0 * bm)).squaredNorm();
  };
  check_close(tape.adjoint(a), fd_gradient(loss_a, a0), 1e-6);
  check_close(tape.adjoint(b), fd_gradient(loss_b, b0), 1e-6);
}

TEST_CASE("elementwise op gradients match finite differences") {
  Rng rng(11);
  const Mat x0 = random_matrix(4, 3, rng);
  const Mat y0 = random_matrix(4, 3, rng);

  SUBCASE("tanh, sin, cos, cmul, shift, scale") {
    Tape tape;
    const Var x = tape.leaf(x0);
    const Var y = tape.leaf(y0);
    const Var expr = tape.sum(tape.cmul(
        tape.tanh(x), tape.add(tape.sin(y), tape.scale(tape.cos(x), 0.5))));
    tape.backward(tape.sum_sq(tape.shift(expr, 0.25)));

    auto loss = [&](const Mat& xm, const Mat& ym) {
      const double s =
          (xm.array().tanh() * (ym.array().sin() + 0.5 * xm.array().cos()))
              .sum() +
          0.25;
      return s * s;
    };
    check_close(tape.adjoint(x),
                fd_gradient([&](const Mat& m) { return loss(m, y0); }, x0),
                1e-6);
    check_close(tape.adjoint(y),
                fd_gradient([&](const Mat& m) { return loss(x0, m); }, y0),
                1e-6);
  }
}

TEST_CASE("structural op gradients match finite differences") {
  Rng rng(17);
  const Mat x0 = random_matrix(6, 2, rng);

  SUBCASE("reshape is row-major") {
    Mat v(12, 1);
    for (int k = 0; k < 12; ++k) v(k, 0) = k;
    Tape tape;
    const Var x = tape.leaf(v);
    const Var m = tape.reshape(x, 3, 4);
    CHECK(tape.value(m)(0, 3) == 3.0);
    CHECK(tape.value(m)(1, 0) == 4.0);
    CHECK(tape.value(m)(2, 3) == 11.0);
  }

  SUBCASE("block, gather_rows, vcat") {
    Tape tape;
    const Var x = tape.leaf(x0);
    const Var top = tape.block(x, 0, 0, 3, 2);
    const Var picked = tape.gather_rows(x, {5, 1, 3});
    const Var stacked = tape.vcat(top, picked);
    tape.backward(tape.sum_sq(stacked));
    auto loss = [&](const Mat& m) {
      Mat s(6, 2);
      s.topRows(3) = m.topRows(3);
      s.row(3) = m.row(5);
      s.row(4) = m.row(1);
      s.row(5) = m.row(3);
      return s.squaredNorm();
    };
    check_close(tape.adjoint(x), fd_gradient(loss, x0), 1e-6);
  }

  SUBCASE("row_scale and add_col") {
    Tape tape;
    const Mat d0 = random_matrix(4, 1, rng);
    const Mat b0 = random_matrix(4, 1, rng);
    const Var d = tape.leaf(d0);
    const Var b = tape.leaf(b0);
    const Var x = tape.leaf(x0.topRows(4));
    tape.backward(tape.sum_sq(tape.add_col(tape.row_scale(d, x), b)));
    auto loss = [&](const Mat& dm, const Mat& xm, const Mat& bm) {
      return ((dm.col(0).asDiagonal() * xm).colwise() + bm.col(0))
          .squaredNorm();
    };
    check_close(
        tape.adjoint(d),
        fd_gradient([&](const Mat& m) { return loss(m, x0.topRows(4), b0); }, d0),
        1e-6);
    check_close(
        tape.adjoint(b),
        fd_gradient([&](const Mat& m) { return loss(d0, x0.topRows(4), m); }, b0),
        1e-6);
  }

  SUBCASE("smul") {
    Tape tape;
    const Var s = tape.scalar(0.7);
    const Var x = tape.leaf(x0);
    tape.backward(tape.sum_sq(tape.smul(s, x)));
    CHECK(tape.adjoint(s)(0, 0) ==
          doctest::Approx(2.0 * 0.7 * x0.squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("colwise_matvec contracts row-major blocks per column") {
  Rng rng(23);
  const int n = 3, k = 2, cols = 4;
  const Mat y0 = random_matrix(n * k, cols, rng);
  const Mat e0 = random_matrix(k, cols, rng);
  Tape tape;
  const Var y = tape.leaf(y0);
  const Var e = tape.leaf(e0);
  const Var z = tape.colwise_matvec(y, e, n, k);

  for (int p = 0; p < cols; ++p) {
    Mat a(n, k);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) a(i, j) = y0(i * k + j, p);
    }
    check_close(tape.value(z).col(p), a * e0.col(p), 1e-13);
  }

  tape.backward(tape.sum_sq(z));
  auto loss = [&](const Mat& ym, const Mat& em) {
    double acc = 0.0;
    for (int p = 0; p < cols; ++p) {
      for (int i = 0; i < n; ++i) {
        double v = 0.0;
        for (int j = 0; j < k; ++j) v += ym(i * k + j, p) * em(j, p);
        acc += v * v;
      }
    }
    return acc;
  };
  check_close(tape.adjoint(y),
              fd_gradient([&](const Mat& m) { return loss(m, e0); }, y0), 1e-6);
  check_close(tape.adjoint(e),
              fd_gradient([&](const Mat& m) { return loss(y0, m); }, e0), 1e-6);
}

TEST_CASE("max eigenvalue node") {
  SUBCASE("diagonal gradient is the top basis outer product") {
    Tape tape;
    Mat c0 = Mat::Zero(2, 2);
    c0(0, 0) = 2.0;
    c0(1, 1) = -1.0;
    const Var c = tape.leaf(c0);
    tape.backward(tape.max_eig_sym(c));
    Mat expected = Mat::Zero(2, 2);
    expected(0, 0) = 1.0;
    check_close(tape.adjoint(c), expected, 1e-12);
  }

  SUBCASE("matches finite differences with an eigenvalue gap") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      Mat g = random_matrix(4, 4, rng);
      Mat c0 = 0.5 * (g + g.transpose());
      c0 += Mat::Identity(4, 4);
      c0(0, 0) += 3.0;  // push a clear top eigenvalue
      Tape tape;
      const Var c = tape.leaf(c0);
      tape.backward(tape.max_eig_sym(c));
      const std::function<double(const Mat&)> loss = [](const Mat& m) {
        return lcs::linalg::max_eig_sym(Mat(0.5 * (m + m.transpose()))).first;
      };
      check_close(tape.adjoint(c), fd_gradient(loss, c0), 5e-5);
    }
  }
}

TEST_CASE("hinge cuts the gradient at zero") {
  Tape tape;
  const Var s = tape.scalar(-0.3);
  tape.backward(tape.hinge(s));
  CHECK(tape.adjoint(s)(0, 0) == 0.0);

  Tape tape2;
  const Var s2 = tape2.scalar(0.3);
  tape2.backward(tape2.hinge(s2));
  CHECK(tape2.adjoint(s2)(0, 0) == 1.0);
}

TEST_CASE("backward requires a scalar and rejects shape mismatches") {
  Tape tape;
  const Var x = tape.leaf(Mat::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
  CHECK_THROWS_AS(tape.add(x, tape.leaf(Mat::Ones(3, 2))), std::invalid_argument);
  CHECK_THROWS_AS(tape.matmul(x, tape.leaf(Mat::Ones(3, 2))), std::invalid_argument);
}

TEST_CASE("unused leaves keep zero adjoints") {
  Tape tape;
  const Var used = tape.leaf(Mat::Ones(2, 1));
  const Var unused = tape.leaf(Mat::Ones(2, 1));
  tape.backward(tape.sum_sq(used));
  CHECK(tape.adjoint(unused).norm() == 0.0);
}

TEST_CASE("identical graphs give bit-identical gradients") {
  Rng rng(41);
  const Mat x0 = random_matrix(5, 3, rng);
  auto run = [&]() {
    Tape tape;
    const Var x = tape.leaf(x0);
    tape.backward(tape.sum_sq(tape.tanh(tape.matmul(tape.transpose(x), x))));
    return Mat(tape.adjoint(x));
  };
  const Mat g1 = run();
  const Mat g2 = run();
  CHECK((g1 - g2).norm() == 0.0);
}
