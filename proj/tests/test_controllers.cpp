#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lcs/controllers.hpp"

using namespace lcs::ctrl;
using lcs::Rng;

namespace {

Vec random_in_box(const lcs::sys::Box& box, Rng& rng) {
  Vec x(box.dim());
  for (int d = 0; d < box.dim(); ++d) {
    x(d) = rng.uniform(box.lower(d), box.upper(d));
  }
  return x;
}

// Linear test system as a SystemSpec.
lcs::sys::SystemSpec linear_system(const Mat& a, const Mat& b) {
  lcs::sys::SystemSpec sys;
  sys.name = "linear";
  sys.n = static_cast<int>(a.rows());
  sys.m = static_cast<int>(b.cols());
  sys.f = [a](const Vec& x) { return Vec(a * x); };
  sys.b = [b](const Vec&) { return b; };
  sys.jac_f = [a](const Vec&) { return a; };
  sys.jac_b_col = [n = sys.n](const Vec&, int) { return Mat::Zero(n, n); };
  sys.state_box.lower = -Vec::Ones(sys.n);
  sys.state_box.upper = Vec::Ones(sys.n);
  sys.control_box.lower = -Vec::Ones(sys.m);
  sys.control_box.upper = Vec::Ones(sys.m);
  return sys;
}

Mat random_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng.unit() - 1.0;
  return m;
}

}  // namespace

TEST_CASE("scalar linearized LQR reproduces u = -x") {
  const auto sys = linear_system(Mat::Zero(1, 1), Mat::Identity(1, 1));
  LinearizedLqr lqr(oracle_model(sys), identity_weights(1, 1));
  const Vec u = lqr.control(Vec::Constant(1, 0.7), Vec::Zero(1), Vec::Zero(1));
  CHECK(u(0) == doctest::Approx(-0.7).epsilon(1e-9));
}

TEST_CASE("double integrator gain matches the closed form") {
  Mat a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  const auto sys = linear_system(a, b);
  LinearizedLqr lqr(oracle_model(sys), identity_weights(2, 1));
  Vec x(2);
  x << 1.0, 0.5;
  const Vec u = lqr.control(x, Vec::Zero(2), Vec::Zero(1));
  CHECK(u(0) ==
        doctest::Approx(-x(0) - std::sqrt(3.0) * x(1)).epsilon(1e-7));
}

TEST_CASE("feedforward consistency for all controllers on the benchmarks") {
  Rng rng(2);
  for (const auto& system : {lcs::sys::make_spacecraft(), lcs::sys::make_pvtol()}) {
    LinearizedLqr lqr(oracle_model(system), identity_weights(system.n, system.m));
    SdLqr sdlqr(oracle_sdc_factors(system), system.b,
                identity_weights(system.n, system.m));
    CcmFeedback ccm(lcs::learn::CcmModel::init(system.n, system.m, {6}, 3));
    for (int trial = 0; trial < 10; ++trial) {
      const Vec xbar = random_in_box(system.state_box, rng);
      const Vec ubar = random_in_box(system.control_box, rng);
      CHECK((lqr.control(xbar, xbar, ubar) - ubar).norm() <= 1e-12);
      CHECK((sdlqr.control(xbar, xbar, ubar) - ubar).norm() <= 1e-12);
      CHECK((ccm.control(xbar, xbar, ubar) - ubar).norm() <= 1e-12);
    }
  }
}

TEST_CASE("sd-lqr equals linearized lqr on random linear systems") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(3));
    const int m = 1 + static_cast<int>(rng.index(2));
    const Mat a = random_matrix(n, n, rng);
    const Mat b = random_matrix(n, m, rng);
    const auto sys = linear_system(a, b);

    LinearizedLqr lqr(oracle_model(sys), identity_weights(n, m));
    SdLqr sdlqr(oracle_sdc_factors(sys), sys.b, identity_weights(n, m));

    const Vec x = random_matrix(n, 1, rng).col(0);
    const Vec xbar = random_matrix(n, 1, rng).col(0);
    const Vec ubar = random_matrix(m, 1, rng).col(0);
    Vec u_lqr, u_sd;
    try {
      u_lqr = lqr.control(x, xbar, ubar);
      u_sd = sdlqr.control(x, xbar, ubar);
    } catch (...) {
      continue;
    }
    if (lqr.solver_failures() + sdlqr.solver_failures() > 0) continue;
    CHECK((u_lqr - u_sd).norm() <= 1e-8 * (1.0 + u_lqr.norm()));
  }
}

TEST_CASE("ccm zero gain network returns the feedforward") {
  lcs::learn::CcmModel model;
  model.n = 2;
  model.m = 1;
  model.l_net = lcs::ad::Network::init({2, 4}, 1);
  model.k_net = lcs::ad::Network::init({4, 2}, 2);
  for (Mat& w : model.k_net.weights) w.setZero();
  for (Vec& b : model.k_net.biases) b.setZero();
  CcmFeedback ccm(model);
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = random_matrix(2, 1, rng).col(0);
    const Vec xbar = random_matrix(2, 1, rng).col(0);
    const Vec ubar = random_matrix(1, 1, rng).col(0);
    CHECK((ccm.control(x, xbar, ubar) - ubar).norm() == 0.0);
  }
}

TEST_CASE("sdre solutions along spacecraft rollouts satisfy the postconditions") {
  const auto system = lcs::sys::make_spacecraft();
  Rng rng(7);
  const auto factors = oracle_sdc_factors(system);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = random_in_box(system.state_box, rng);
    const Vec xbar = random_in_box(system.state_box, rng);
    const Vec ubar = random_in_box(system.control_box, rng);
    const Vec e = x - xbar;
    Mat a_sdc = factors.factor(xbar, e, 0);
    for (int j = 0; j < system.m; ++j) {
      a_sdc += ubar(j) * factors.factor(xbar, e, j + 1);
    }
    const Mat b = system.b(x);
    const lcs::linalg::CareSolution sol = lcs::linalg::solve_care(
        {a_sdc, b, Mat::Identity(6, 6), Mat::Identity(3, 3)}, 1e-9);
    CHECK(sol.residual_norm <= 1e-9);
    const Mat k = b.transpose() * sol.p;
    CHECK(lcs::linalg::is_hurwitz(a_sdc - b * k));
  }
}

TEST_CASE("gain cache covers solver failures and zero feedback has no cache") {
  // A pair that cannot be stabilized: unstable mode with no control authority.
  Mat a(2, 2), b(2, 1);
  a << 1, 0, 0, -1;
  b << 0, 1;
  const auto sys = linear_system(a, b);
  LinearizedLqr lqr(oracle_model(sys), identity_weights(2, 1));
  Vec x(2);
  x << 0.3, -0.2;
  const Vec ubar = Vec::Constant(1, 0.4);
  const Vec u = lqr.control(x, Vec::Zero(2), ubar);
  CHECK(lqr.solver_failures() == 1);
  CHECK((u - ubar).norm() == 0.0);  // no cache yet: zero feedback

  lqr.reset();
  CHECK(lqr.solver_failures() == 0);
}

TEST_CASE("oracle linearized lqr stabilizes equilibrium perturbations") {
  // Constant-target tracking from a small perturbation contracts the error.
  for (const auto& system : {lcs::sys::make_spacecraft(), lcs::sys::make_pvtol()}) {
    const Vec xbar = Vec::Zero(6);
    Vec ubar = Vec::Zero(system.m);
    if (system.name == "pvtol") ubar = Vec::Constant(2, 0.5 * 0.5 * 9.81);
    LinearizedLqr lqr(oracle_model(system), identity_weights(system.n, system.m));

    Vec x = xbar;
    x(0) += 0.01 / std::sqrt(2.0);
    x(3) += 0.01 / std::sqrt(2.0);
    const double e0 = (x - xbar).norm();
    const double dt = 0.01;
    for (int k = 0; k < 500; ++k) {
      const StepPolicy policy = lqr.step_policy(x, xbar, ubar);
      x = lcs::sys::rk4_step(
          [&](double, const Vec& s) {
            return lcs::sys::eval_dynamics(system, s, policy(s));
          },
          k * dt, x, dt);
    }
    CHECK((x - xbar).norm() <= 0.1 * e0);
    CHECK(lqr.solver_failures() == 0);
  }
}
