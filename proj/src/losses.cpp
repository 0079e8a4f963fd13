#include "lcs/losses.hpp"

#include <stdexcept>

namespace lcs::learn {

using ad::Tape;
using ad::Var;

TapedDyn push_dyn(Tape& tape, const DynamicsModel& model) {
  TapedDyn taped;
  taped.model = &model;
  taped.f = push_network(tape, model.f_net);
  taped.b = push_network(tape, model.b_net);
  return taped;
}

TapedSdc push_sdc(Tape& tape, const SdcModel& model) {
  TapedSdc taped;
  taped.model = &model;
  for (const ad::Network& net : model.a_nets) {
    taped.a.push_back(push_network(tape, net));
  }
  return taped;
}

TapedCcm push_ccm(Tape& tape, const CcmModel& model) {
  TapedCcm taped;
  taped.model = &model;
  taped.l = push_network(tape, model.l_net);
  taped.k = push_network(tape, model.k_net);
  return taped;
}

Var taped_b_times(Tape& tape, const TapedDyn& dyn, Var b_out, const Mat& u) {
  return tape.colwise_matvec(b_out, tape.constant(u), dyn.model->n,
                             dyn.model->m);
}

Var loss_dyn_reg(Tape& tape, const TapedDyn& dyn, const Mat& x, const Mat& u,
                 const Mat& xdot) {
  if (x.cols() == 0) throw std::invalid_argument("loss_dyn_reg: empty batch");
  const Var xc = tape.constant(x);
  const Var f = net_forward(tape, dyn.model->f_net, dyn.f, xc);
  const Var b_out = net_forward(tape, dyn.model->b_net, dyn.b, xc);
  const Var bu = taped_b_times(tape, dyn, b_out, u);
  const Var residual = tape.sub(tape.sub(tape.constant(xdot), f), bu);
  return tape.sum_sq(residual);
}

namespace {

// Stacked (x̄, e) inputs for the A-nets.
Mat sdc_inputs(const Mat& xbar, const Mat& x) {
  Mat in(2 * xbar.rows(), xbar.cols());
  in.topRows(xbar.rows()) = xbar;
  in.bottomRows(xbar.rows()) = x - xbar;
  return in;
}

}  // namespace

Var loss_sdc_reg(Tape& tape, const TapedSdc& sdc, const TapedDyn& dyn,
                 const PairBatch& pairs) {
  if (pairs.size() == 0) throw std::invalid_argument("loss_sdc_reg: empty batch");
  const int n = sdc.model->n, m = sdc.model->m;
  const Mat e = pairs.x - pairs.xbar;
  const Var e_c = tape.constant(e);
  const Var in_c = tape.constant(sdc_inputs(pairs.xbar, pairs.x));

  const ad::Network& a0 = sdc.model->a_nets[0];
  Var ae = tape.colwise_matvec(net_forward(tape, a0, sdc.a[0], in_c), e_c, n, n);
  for (int j = 0; j < m; ++j) {
    const Var aje = tape.colwise_matvec(
        net_forward(tape, sdc.model->a_nets[j + 1], sdc.a[j + 1], in_c), e_c,
        n, n);
    // Per-pair scaling by the constant ū_j.
    const Mat rep = pairs.ubar.row(j).replicate(n, 1);
    ae = tape.add(ae, tape.cmul(aje, tape.constant(rep)));
  }

  const Var b_out =
      net_forward(tape, dyn.model->b_net, dyn.b, tape.constant(pairs.x));
  const Var bv = taped_b_times(tape, dyn, b_out, Mat(pairs.u - pairs.ubar));

  const Mat edot = pairs.xdot - pairs.xbardot;
  const Var residual = tape.sub(tape.sub(tape.constant(edot), ae), bv);
  return tape.sum_sq(residual);
}

Var loss_sdc_aux(Tape& tape, const TapedSdc& sdc, const TapedDyn& dyn,
                 const Mat& x, const Mat& xbar) {
  if (x.cols() == 0) throw std::invalid_argument("loss_sdc_aux: empty batch");
  const int n = sdc.model->n, m = sdc.model->m;
  const Var x_c = tape.constant(x);
  const Var xbar_c = tape.constant(xbar);
  const Var e_c = tape.constant(Mat(x - xbar));
  const Var in_c = tape.constant(sdc_inputs(xbar, x));

  const Var f_x = net_forward(tape, dyn.model->f_net, dyn.f, x_c);
  const Var f_xbar = net_forward(tape, dyn.model->f_net, dyn.f, xbar_c);
  const Var a0e = tape.colwise_matvec(
      net_forward(tape, sdc.model->a_nets[0], sdc.a[0], in_c), e_c, n, n);
  Var total = tape.sum_sq(tape.sub(tape.sub(f_x, f_xbar), a0e));

  const Var b_x = net_forward(tape, dyn.model->b_net, dyn.b, x_c);
  const Var b_xbar = net_forward(tape, dyn.model->b_net, dyn.b, xbar_c);
  const Var b_diff = tape.sub(b_x, b_xbar);
  for (int j = 0; j < m; ++j) {
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = i * m + j;
    const Var bj = tape.gather_rows(b_diff, rows);
    const Var aje = tape.colwise_matvec(
        net_forward(tape, sdc.model->a_nets[j + 1], sdc.a[j + 1], in_c), e_c,
        n, n);
    total = tape.add(total, tape.sum_sq(tape.sub(bj, aje)));
  }
  return total;
}

Var loss_ccm_aux(Tape& tape, const TapedCcm& ccm, const TapedDyn& dyn,
                 const Mat& x, const Mat& xbar, const Mat& ubar) {
  if (x.cols() == 0) throw std::invalid_argument("loss_ccm_aux: empty batch");
  const int n = ccm.model->n, m = ccm.model->m;
  const double lam = ccm.model->lambda_floor;
  const double beta = ccm.model->decay_rate;
  const double alpha = ccm.model->overshoot;
  const Mat eye_lam = lam * Mat::Identity(n, n);

  Var total = tape.scalar(0.0);
  for (Eigen::Index p = 0; p < x.cols(); ++p) {
    const Var x_c = tape.constant(x.col(p));
    const Var e_c = tape.constant(Mat(x.col(p) - xbar.col(p)));
    Mat kin(2 * n, 1);
    kin.col(0) << x.col(p), xbar.col(p);
    const Var kin_c = tape.constant(kin);

    // u = ū + K(x,x̄)(x−x̄)
    const Var k_out = net_forward(tape, ccm.model->k_net, ccm.k, kin_c);
    const Var k_mat = tape.reshape(k_out, m, n);
    const Var u = tape.add(tape.constant(ubar.col(p)), tape.matmul(k_mat, e_c));

    // Model dynamics at x under u.
    const Var f = net_forward(tape, dyn.model->f_net, dyn.f, x_c);
    const Var b_out = net_forward(tape, dyn.model->b_net, dyn.b, x_c);
    const Var b_mat = tape.reshape(b_out, n, m);
    const Var xdot = tape.add(f, tape.matmul(b_mat, u));

    // Ā = ∂f/∂x + Σ_j u_j ∂b_j/∂x + B ∂k/∂x, all taped Jacobians.
    Var abar = net_input_jacobian(tape, dyn.model->f_net, dyn.f, x_c);
    const Var jb = net_input_jacobian(tape, dyn.model->b_net, dyn.b, x_c);
    for (int j = 0; j < m; ++j) {
      std::vector<int> rows(n);
      for (int i = 0; i < n; ++i) rows[i] = i * m + j;
      const Var dbj = tape.gather_rows(jb, rows);
      abar = tape.add(abar, tape.smul(tape.block(u, j, 0, 1, 1), dbj));
    }
    const Var jk = net_input_jacobian(tape, ccm.model->k_net, ccm.k, kin_c);
    const Var jk_x = tape.block(jk, 0, 0, m * n, n);
    // ∂k/∂x row i = K_i,: + eᵀ · ∂K_i,:/∂x.
    Var dkdx = tape.matmul(tape.transpose(e_c), tape.block(jk_x, 0, 0, n, n));
    for (int i = 1; i < m; ++i) {
      dkdx = tape.vcat(dkdx, tape.matmul(tape.transpose(e_c),
                                         tape.block(jk_x, i * n, 0, n, n)));
    }
    dkdx = tape.add(k_mat, dkdx);
    abar = tape.add(abar, tape.matmul(b_mat, dkdx));

    // M = λ̲I + LLᵀ and Ṁ_ij = ∇M_ij(x)ᵀ ẋ via L̇ = (∂vecL/∂x) ẋ.
    const Var l_mat =
        tape.reshape(net_forward(tape, ccm.model->l_net, ccm.l, x_c), n, n);
    const Var metric = tape.add(tape.constant(eye_lam),
                                tape.matmul(l_mat, tape.transpose(l_mat)));
    const Var jl = net_input_jacobian(tape, ccm.model->l_net, ccm.l, x_c);
    const Var ldot = tape.reshape(tape.matmul(jl, xdot), n, n);
    const Var mdot = tape.add(tape.matmul(ldot, tape.transpose(l_mat)),
                              tape.matmul(l_mat, tape.transpose(ldot)));

    const Var c_mat = tape.add(
        tape.add(mdot, tape.scale(metric, 2.0 * beta)),
        tape.add(tape.matmul(tape.transpose(abar), metric),
                 tape.matmul(metric, abar)));

    const Var hinge_c = tape.hinge(tape.max_eig_sym(c_mat));
    const Var hinge_m = tape.hinge(
        tape.shift(tape.max_eig_sym(metric), -alpha * alpha * lam));
    total = tape.add(total, tape.add(hinge_c, hinge_m));
  }
  return total;
}

}  // namespace lcs::learn
