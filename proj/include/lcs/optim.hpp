#ifndef LCS_OPTIM_HPP_
#define LCS_OPTIM_HPP_

#include <Eigen/Dense>

namespace lcs::ad {

/// Bias-corrected Adam over a flat parameter vector.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step_count = 0;

  explicit AdamState(Eigen::Index dim, double lr = 1e-3)
      : learning_rate(lr),
        first_moment(Eigen::VectorXd::Zero(dim)),
        second_moment(Eigen::VectorXd::Zero(dim)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);
};

}  // namespace lcs::ad

#endif  // LCS_OPTIM_HPP_
