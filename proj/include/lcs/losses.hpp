#ifndef LCS_LOSSES_HPP_
#define LCS_LOSSES_HPP_

#include "lcs/models.hpp"
#include "lcs/tape.hpp"

namespace lcs::learn {

/// Tape handles for a model's parameters, pushed once per tape build.
struct TapedDyn {
  const DynamicsModel* model = nullptr;
  ad::NetworkVars f, b;
};
struct TapedSdc {
  const SdcModel* model = nullptr;
  std::vector<ad::NetworkVars> a;
};
struct TapedCcm {
  const CcmModel* model = nullptr;
  ad::NetworkVars l, k;
};

TapedDyn push_dyn(ad::Tape& tape, const DynamicsModel& model);
TapedSdc push_sdc(ad::Tape& tape, const SdcModel& model);
TapedCcm push_ccm(ad::Tape& tape, const CcmModel& model);

/// Taped B̂(x)·u for a batch: b_net output columns contracted with u columns.
ad::Var taped_b_times(ad::Tape& tape, const TapedDyn& dyn, ad::Var b_out,
                      const Mat& u);

/// Σ ‖ẋ − f̂(x) − B̂(x)u‖² over the batch columns.
ad::Var loss_dyn_reg(ad::Tape& tape, const TapedDyn& dyn, const Mat& x,
                     const Mat& u, const Mat& xdot);

/// Paired samples for the SDC regression loss.
struct PairBatch {
  Mat x, u, xdot;           // first element of each pair
  Mat xbar, ubar, xbardot;  // second element
  int size() const { return static_cast<int>(x.cols()); }
};

/// Σ ‖ė − A_SDC(x̄,ū,e)e − B̂(x)v‖² with ė = ẋ−ẋ̄, v = u−ū, e = x−x̄.
ad::Var loss_sdc_reg(ad::Tape& tape, const TapedSdc& sdc, const TapedDyn& dyn,
                     const PairBatch& pairs);

/// Σ ‖f̂(x)−f̂(x̄)−A₀(x̄,e)e‖² + Σ_j ‖b̂_j(x)−b̂_j(x̄)−A_j(x̄,e)e‖².
ad::Var loss_sdc_aux(ad::Tape& tape, const TapedSdc& sdc, const TapedDyn& dyn,
                     const Mat& x, const Mat& xbar);

/// Σ [max(0, λ_max(C(x,x̄,ū))) + max(0, λ_max(M(x)) − α²λ̲)] with
/// C = Ṁ + ĀᵀM + MĀ + 2βM built from taped network Jacobians.
ad::Var loss_ccm_aux(ad::Tape& tape, const TapedCcm& ccm, const TapedDyn& dyn,
                     const Mat& x, const Mat& xbar, const Mat& ubar);

}  // namespace lcs::learn

#endif  // LCS_LOSSES_HPP_
