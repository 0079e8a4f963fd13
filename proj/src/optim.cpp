#include "lcs/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace lcs::ad {

void AdamState::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (params.size() != first_moment.size() || grads.size() != params.size()) {
    throw std::invalid_argument("adam: shape mismatch");
  }
  ++step_count;
  first_moment = beta1 * first_moment + (1.0 - beta1) * grads;
  second_moment =
      beta2 * second_moment + (1.0 - beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  params.array() -= learning_rate * (first_moment.array() / c1) /
                    ((second_moment.array() / c2).sqrt() + epsilon);
}

}  // namespace lcs::ad
