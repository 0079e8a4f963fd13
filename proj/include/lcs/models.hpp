#ifndef LCS_MODELS_HPP_
#define LCS_MODELS_HPP_

#include <string>
#include <vector>

#include "lcs/network.hpp"

namespace lcs::learn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Control-affine dynamics model: f̂ as an n→n net and B̂ as an n→(n·m) net
/// whose output is reshaped row-major to n×m.
struct DynamicsModel {
  int n = 0;
  int m = 0;
  ad::Network f_net;
  ad::Network b_net;

  static DynamicsModel init(int n, int m, const std::vector<int>& hidden,
                            std::uint64_t seed);

  Vec f(const Vec& x) const { return f_net.forward(x); }
  Mat b(const Vec& x) const;
  Mat jac_f(const Vec& x) const { return f_net.jacobian(x); }
  Mat jac_b_col(const Vec& x, int j) const;
};

/// SDC factor models: m+1 nets mapping (x̄, e) ∈ ℝ²ⁿ to an n×n matrix each;
/// index 0 factors the drift, 1..m factor the actuator columns.
struct SdcModel {
  int n = 0;
  int m = 0;
  std::vector<ad::Network> a_nets;

  static SdcModel init(int n, int m, const std::vector<int>& hidden,
                       std::uint64_t seed);

  Mat a_factor(int field_index, const Vec& xbar, const Vec& e) const;
  /// A_SDC(x̄, ū, e) = A₀(x̄,e) + Σ_j ū_j A_j(x̄,e).
  Mat a_sdc(const Vec& xbar, const Vec& ubar, const Vec& e) const;
};

/// CCM model: M(x) = λ̲I + L(x)L(x)ᵀ with L an n→n·n net, and feedback
/// k(x,x̄) = K(x,x̄)(x−x̄) with K a 2n→m·n net.
struct CcmModel {
  int n = 0;
  int m = 0;
  double lambda_floor = 0.1;
  double overshoot = 10.0;   // α
  double decay_rate = 0.5;   // β
  ad::Network l_net;
  ad::Network k_net;

  static CcmModel init(int n, int m, const std::vector<int>& hidden,
                       std::uint64_t seed);

  Mat metric(const Vec& x) const;          // M(x), always ⪰ λ̲I
  Mat gain(const Vec& x, const Vec& xbar) const;  // K(x,x̄), m×n
  Vec feedback(const Vec& x, const Vec& xbar) const;  // k(x,x̄)
};

/// Flat parameter plumbing over a set of networks (training order).
Vec flatten_all(const std::vector<const ad::Network*>& nets);
void unflatten_all(const std::vector<ad::Network*>& nets, const Vec& theta);
int total_param_count(const std::vector<const ad::Network*>& nets);

/// Checkpoint directory: one JSON per network plus a manifest naming the
/// method and hyperparameters.
struct Checkpoint {
  std::string method;  // naive | sdc | ccm
  std::string system;
  int n = 0;
  int m = 0;
  std::vector<int> hidden;
  std::uint64_t seed = 0;
  int labelled_size = 0;
  double lambda_floor = 0.1, overshoot = 10.0, decay_rate = 0.5;
};

void save_checkpoint(const std::string& dir, const Checkpoint& info,
                     const DynamicsModel& dyn, const SdcModel* sdc,
                     const CcmModel* ccm);

struct LoadedCheckpoint {
  Checkpoint info;
  DynamicsModel dyn;
  SdcModel sdc;  // populated when info.method == "sdc"
  CcmModel ccm;  // populated when info.method == "ccm"
};

LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace lcs::learn

#endif  // LCS_MODELS_HPP_
