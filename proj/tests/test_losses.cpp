#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "lcs/linalg.hpp"
#include "lcs/losses.hpp"
#include "lcs/rng.hpp"
#include "lcs/systems.hpp"

using namespace lcs::learn;
using lcs::Rng;
using lcs::ad::Network;
using lcs::ad::NetworkVars;
using lcs::ad::Tape;
using lcs::ad::Var;

namespace {

Mat random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.unit() - 1.0);
  return m;
}

// Single linear layer realizing y = W x + b exactly.
Network linear_net(const Mat& w, const Vec& b) {
  Network net;
  net.layer_widths = {static_cast<int>(w.cols()), static_cast<int>(w.rows())};
  net.weights = {w};
  net.biases = {b};
  return net;
}

Vec vec_row_major(const Mat& m) {
  Vec v(m.size());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

// Exact model of a linear system ẋ = Ax + Bu.
DynamicsModel exact_linear_model(const Mat& a, const Mat& b) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(b.cols());
  DynamicsModel model;
  model.n = n;
  model.m = m;
  model.f_net = linear_net(a, Vec::Zero(n));
  model.b_net = linear_net(Mat::Zero(n * m, n), vec_row_major(b));
  return model;
}

// SDC model with constant factors: A0 ≡ a0, Aj ≡ 0.
SdcModel constant_sdc_model(const Mat& a0, int m) {
  const int n = static_cast<int>(a0.rows());
  SdcModel model;
  model.n = n;
  model.m = m;
  model.a_nets.push_back(
      linear_net(Mat::Zero(n * n, 2 * n), vec_row_major(a0)));
  for (int j = 0; j < m; ++j) {
    model.a_nets.push_back(
        linear_net(Mat::Zero(n * n, 2 * n), Vec::Zero(n * n)));
  }
  return model;
}

// Gradient-check harness: the builder pushes every trainable net (in `nets`
// order) and returns the scalar loss.
using Builder = std::function<Var(Tape&, std::vector<NetworkVars>&)>;

struct GradCheckResult {
  int checked = 0;
  int agreed = 0;
};

GradCheckResult check_gradients(std::vector<Network*> nets, const Builder& build,
                                double rel_tol = 1e-5, double h = 1e-5) {
  Tape tape;
  std::vector<NetworkVars> vars;
  const Var loss = build(tape, vars);
  REQUIRE(vars.size() == nets.size());
  tape.backward(loss);

  int total_params = 0;
  for (Network* net : nets) total_params += net->param_count();
  Vec grad = Vec::Zero(total_params);
  int offset = 0;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    offset = accumulate_network_grad(tape, *nets[i], vars[i], grad, offset);
  }

  auto eval = [&]() {
    Tape t;
    std::vector<NetworkVars> v;
    return t.value(build(t, v))(0, 0);
  };

  GradCheckResult result;
  offset = 0;
  for (Network* net : nets) {
    const Vec theta = net->flatten();
    for (int i = 0; i < theta.size(); ++i) {
      Vec tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      net->unflatten(tp);
      const double fp = eval();
      net->unflatten(tm);
      const double fm = eval();
      net->unflatten(theta);
      const double fd = (fp - fm) / (2.0 * h);
      const double an = grad(offset + i);
      if (std::abs(fd) > 1e-6) {
        ++result.checked;
        if (std::abs(an - fd) <= rel_tol * std::abs(fd) + 1e-10) ++result.agreed;
      }
    }
    offset += net->param_count();
  }
  return result;
}

void expect_gradcheck(const GradCheckResult& result) {
  REQUIRE(result.checked > 10);
  CHECK(result.agreed >= static_cast<int>(0.99 * result.checked));
}

}  // namespace

TEST_CASE("dyn regression loss values") {
  SUBCASE("exact model gives zero") {
    Rng rng(1);
    const Mat a = random_matrix(3, 3, rng);
    const Mat b = random_matrix(3, 2, rng);
    DynamicsModel model = exact_linear_model(a, b);
    const Mat x = random_matrix(3, 10, rng);
    const Mat u = random_matrix(2, 10, rng);
    const Mat xdot = a * x + b * u;
    Tape tape;
    const TapedDyn td = push_dyn(tape, model);
    CHECK(tape.value(loss_dyn_reg(tape, td, x, u, xdot))(0, 0) <= 1e-22);
  }
  SUBCASE("unit residual gives one; two residuals add in squares") {
    DynamicsModel model = exact_linear_model(Mat::Zero(6, 6), Mat::Zero(6, 3));
    Mat x = Mat::Zero(6, 1), u = Mat::Zero(3, 1), xdot = Mat::Zero(6, 1);
    xdot(0, 0) = 1.0;
    Tape tape;
    const TapedDyn td = push_dyn(tape, model);
    CHECK(tape.value(loss_dyn_reg(tape, td, x, u, xdot))(0, 0) ==
          doctest::Approx(1.0));

    Mat x2 = Mat::Zero(6, 2), u2 = Mat::Zero(3, 2), xdot2 = Mat::Zero(6, 2);
    xdot2(0, 0) = 2.0;  // norm a = 2
    xdot2(1, 1) = 3.0;  // norm b = 3
    Tape tape2;
    const TapedDyn td2 = push_dyn(tape2, model);
    CHECK(tape2.value(loss_dyn_reg(tape2, td2, x2, u2, xdot2))(0, 0) ==
          doctest::Approx(13.0));
  }
}

TEST_CASE("sdc regression loss values") {
  Rng rng(2);
  const Mat a = random_matrix(4, 4, rng);
  const Mat b = random_matrix(4, 2, rng);

  SUBCASE("identical pair contributes zero") {
    DynamicsModel dyn = DynamicsModel::init(4, 2, {4}, 3);
    SdcModel sdc = SdcModel::init(4, 2, {4}, 4);
    PairBatch pairs;
    pairs.x = pairs.xbar = random_matrix(4, 3, rng);
    pairs.u = pairs.ubar = random_matrix(2, 3, rng);
    pairs.xdot = pairs.xbardot = random_matrix(4, 3, rng);
    Tape tape;
    const TapedDyn td = push_dyn(tape, dyn);
    const TapedSdc ts = push_sdc(tape, sdc);
    CHECK(tape.value(loss_sdc_reg(tape, ts, td, pairs))(0, 0) <= 1e-24);
  }

  SUBCASE("exact linear factorization gives zero on true pairs") {
    DynamicsModel dyn = exact_linear_model(a, b);
    SdcModel sdc = constant_sdc_model(a, 2);
    PairBatch pairs;
    pairs.x = random_matrix(4, 8, rng);
    pairs.xbar = random_matrix(4, 8, rng);
    pairs.u = random_matrix(2, 8, rng);
    pairs.ubar = random_matrix(2, 8, rng);
    pairs.xdot = a * pairs.x + b * pairs.u;
    pairs.xbardot = a * pairs.xbar + b * pairs.ubar;
    Tape tape;
    const TapedDyn td = push_dyn(tape, dyn);
    const TapedSdc ts = push_sdc(tape, sdc);
    CHECK(tape.value(loss_sdc_reg(tape, ts, td, pairs))(0, 0) <= 1e-20);
  }

  SUBCASE("zero networks leave the edot norm") {
    DynamicsModel dyn = exact_linear_model(Mat::Zero(4, 4), Mat::Zero(4, 2));
    SdcModel sdc = constant_sdc_model(Mat::Zero(4, 4), 2);
    PairBatch pairs;
    pairs.x = random_matrix(4, 1, rng);
    pairs.xbar = random_matrix(4, 1, rng);
    pairs.u = pairs.ubar = Mat::Zero(2, 1);
    pairs.xdot = random_matrix(4, 1, rng);
    pairs.xbardot = random_matrix(4, 1, rng);
    Tape tape;
    const TapedDyn td = push_dyn(tape, dyn);
    const TapedSdc ts = push_sdc(tape, sdc);
    CHECK(tape.value(loss_sdc_reg(tape, ts, td, pairs))(0, 0) ==
          doctest::Approx((pairs.xdot - pairs.xbardot).squaredNorm()));
  }
}

TEST_CASE("sdc aux loss values") {
  Rng rng(5);
  const Mat a = random_matrix(3, 3, rng);
  const Mat b = random_matrix(3, 2, rng);

  SUBCASE("x equal to xbar gives zero") {
    DynamicsModel dyn = DynamicsModel::init(3, 2, {5}, 6);
    SdcModel sdc = SdcModel::init(3, 2, {5}, 7);
    const Mat x = random_matrix(3, 6, rng);
    Tape tape;
    const TapedDyn td = push_dyn(tape, dyn);
    const TapedSdc ts = push_sdc(tape, sdc);
    CHECK(tape.value(loss_sdc_aux(tape, ts, td, x, x))(0, 0) <= 1e-22);
  }

  SUBCASE("linear fields with constant factors give zero") {
    DynamicsModel dyn = exact_linear_model(a, b);
    SdcModel sdc = constant_sdc_model(a, 2);
    const Mat x = random_matrix(3, 6, rng);
    const Mat xbar = random_matrix(3, 6, rng);
    Tape tape;
    const TapedDyn td = push_dyn(tape, dyn);
    const TapedSdc ts = push_sdc(tape, sdc);
    CHECK(tape.value(loss_sdc_aux(tape, ts, td, x, xbar))(0, 0) <= 1e-20);
  }

  SUBCASE("zero factor nets leave the field differences") {
    DynamicsModel dyn = exact_linear_model(a, b);
    SdcModel sdc = constant_sdc_model(Mat::Zero(3, 3), 2);
    const Mat x = random_matrix(3, 1, rng);
    const Mat xbar = random_matrix(3, 1, rng);
    Tape tape;
    const TapedDyn td = push_dyn(tape, dyn);
    const TapedSdc ts = push_sdc(tape, sdc);
    // Constant B makes the b_j differences vanish; only the drift term stays.
    const double expected = (a * (x - xbar)).squaredNorm();
    CHECK(tape.value(loss_sdc_aux(tape, ts, td, x, xbar))(0, 0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("ccm aux loss on the scalar toy system is exactly zero") {
  // f = -x fitted exactly, B = 0, M = λ̲ (L = 0), K = 0, β = 0.5:
  // C = 2λ̲·(-1) + 2β·λ̲ = -0.1 < 0 and λ_max(M) = λ̲ ≤ α²λ̲.
  DynamicsModel dyn = exact_linear_model(-Mat::Identity(1, 1), Mat::Zero(1, 1));
  CcmModel ccm;
  ccm.n = 1;
  ccm.m = 1;
  ccm.l_net = linear_net(Mat::Zero(1, 1), Vec::Zero(1));
  ccm.k_net = linear_net(Mat::Zero(1, 2), Vec::Zero(1));

  Rng rng(8);
  const Mat x = random_matrix(1, 5, rng);
  const Mat xbar = random_matrix(1, 5, rng);
  const Mat ubar = random_matrix(1, 5, rng);
  Tape tape;
  const TapedDyn td = push_dyn(tape, dyn);
  const TapedCcm tc = push_ccm(tape, ccm);
  CHECK(tape.value(loss_ccm_aux(tape, tc, td, x, xbar, ubar))(0, 0) == 0.0);
}

TEST_CASE("ccm aux loss is nonnegative and the metric bound term vanishes") {
  Rng rng(9);
  DynamicsModel dyn = DynamicsModel::init(2, 1, {4}, 10);
  CcmModel ccm = CcmModel::init(2, 1, {4}, 11);
  const Mat x = random_matrix(2, 4, rng);
  const Mat xbar = random_matrix(2, 4, rng);
  const Mat ubar = random_matrix(1, 4, rng);
  Tape tape;
  const TapedDyn td = push_dyn(tape, dyn);
  const TapedCcm tc = push_ccm(tape, ccm);
  CHECK(tape.value(loss_ccm_aux(tape, tc, td, x, xbar, ubar))(0, 0) >= 0.0);
}

TEST_CASE("ccm constructional guarantees hold for random weights") {
  Rng rng(12);
  CcmModel ccm = CcmModel::init(3, 2, {6}, 13);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = random_matrix(3, 1, rng).col(0);
    const Vec xbar = random_matrix(3, 1, rng).col(0);
    // M(x) ⪰ λ̲ I by construction.
    const Mat m = ccm.metric(x);
    const Vec evals = lcs::linalg::sym_eigenvalues(m);
    CHECK(evals(0) >= ccm.lambda_floor - 1e-12);
    // k(x̄, x̄) = 0 exactly.
    CHECK(ccm.feedback(xbar, xbar).norm() == 0.0);
  }
}

TEST_CASE("gradient checks against central finite differences") {
  Rng rng(20);

  SUBCASE("dyn regression loss") {
    DynamicsModel dyn = DynamicsModel::init(3, 2, {5}, 21);
    const Mat x = random_matrix(3, 3, rng);
    const Mat u = random_matrix(2, 3, rng);
    const Mat xdot = random_matrix(3, 3, rng);
    expect_gradcheck(check_gradients(
        {&dyn.f_net, &dyn.b_net},
        [&](Tape& tape, std::vector<NetworkVars>& vars) {
          const TapedDyn td = push_dyn(tape, dyn);
          vars = {td.f, td.b};
          return loss_dyn_reg(tape, td, x, u, xdot);
        }));
  }

  SUBCASE("sdc composite loss (regression + aux + dyn)") {
    DynamicsModel dyn = DynamicsModel::init(2, 1, {4}, 22);
    SdcModel sdc = SdcModel::init(2, 1, {4}, 23);
    PairBatch pairs;
    pairs.x = random_matrix(2, 2, rng);
    pairs.xbar = random_matrix(2, 2, rng);
    pairs.u = random_matrix(1, 2, rng);
    pairs.ubar = random_matrix(1, 2, rng);
    pairs.xdot = random_matrix(2, 2, rng);
    pairs.xbardot = random_matrix(2, 2, rng);
    const Mat aux_x = random_matrix(2, 2, rng);
    const Mat aux_xbar = random_matrix(2, 2, rng);
    expect_gradcheck(check_gradients(
        {&dyn.f_net, &dyn.b_net, &sdc.a_nets[0], &sdc.a_nets[1]},
        [&](Tape& tape, std::vector<NetworkVars>& vars) {
          const TapedDyn td = push_dyn(tape, dyn);
          const TapedSdc ts = push_sdc(tape, sdc);
          vars = {td.f, td.b, ts.a[0], ts.a[1]};
          Var loss = loss_dyn_reg(tape, td, pairs.x, pairs.u, pairs.xdot);
          loss = tape.add(loss, loss_sdc_reg(tape, ts, td, pairs));
          return tape.add(loss, loss_sdc_aux(tape, ts, td, aux_x, aux_xbar));
        }));
  }

  SUBCASE("ccm total loss (dyn + aux with taped jacobians)") {
    DynamicsModel dyn = DynamicsModel::init(2, 1, {4}, 24);
    CcmModel ccm = CcmModel::init(2, 1, {4}, 25);
    // Scale L up so the hinge terms are active and differentiable.
    for (Mat& w : ccm.l_net.weights) w *= 3.0;
    const Mat x = random_matrix(2, 2, rng);
    const Mat u = random_matrix(1, 2, rng);
    const Mat xdot = random_matrix(2, 2, rng);
    const Mat aux_x = random_matrix(2, 2, rng);
    const Mat aux_xbar = random_matrix(2, 2, rng);
    const Mat aux_ubar = random_matrix(1, 2, rng);
    expect_gradcheck(check_gradients(
        {&dyn.f_net, &dyn.b_net, &ccm.l_net, &ccm.k_net},
        [&](Tape& tape, std::vector<NetworkVars>& vars) {
          const TapedDyn td = push_dyn(tape, dyn);
          const TapedCcm tc = push_ccm(tape, ccm);
          vars = {td.f, td.b, tc.l, tc.k};
          const Var loss = loss_dyn_reg(tape, td, x, u, xdot);
          return tape.add(loss,
                          loss_ccm_aux(tape, tc, td, aux_x, aux_xbar, aux_ubar));
        },
        1e-5, 1e-5));
  }
}

TEST_CASE("oracle-consistent composite loss vanishes on true-dynamics data") {
  // Exactness of every component on a linear system (the composite loss of
  // the SDC method evaluated at its global optimum).
  Rng rng(30);
  const Mat a = random_matrix(3, 3, rng);
  const Mat b = random_matrix(3, 1, rng);
  DynamicsModel dyn = exact_linear_model(a, b);
  SdcModel sdc = constant_sdc_model(a, 1);

  PairBatch pairs;
  pairs.x = random_matrix(3, 5, rng);
  pairs.xbar = random_matrix(3, 5, rng);
  pairs.u = random_matrix(1, 5, rng);
  pairs.ubar = random_matrix(1, 5, rng);
  pairs.xdot = a * pairs.x + b * pairs.u;
  pairs.xbardot = a * pairs.xbar + b * pairs.ubar;

  Tape tape;
  const TapedDyn td = push_dyn(tape, dyn);
  const TapedSdc ts = push_sdc(tape, sdc);
  Var loss = loss_dyn_reg(tape, td, pairs.x, pairs.u, pairs.xdot);
  loss = tape.add(loss, loss_sdc_reg(tape, ts, td, pairs));
  loss = tape.add(loss, loss_sdc_aux(tape, ts, td, pairs.x, pairs.xbar));
  CHECK(tape.value(loss)(0, 0) <= 1e-12);
}
