#ifndef LCS_SYSTEMS_HPP_
#define LCS_SYSTEMS_HPP_

#include <functional>
#include <string>
#include <vector>

#include "lcs/rng.hpp"
#include "lcs/tape.hpp"

namespace lcs::sys {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Box {
  Vec lower;
  Vec upper;
  int dim() const { return static_cast<int>(lower.size()); }
};

/// A benchmark system ẋ = f(x) + B(x)u with exact vector fields, analytic
/// Jacobians, sampling domains, and a taped batched evaluation of the same
/// dynamics for trajectory optimization.
struct SystemSpec {
  std::string name;
  int n = 0;
  int m = 0;

  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> b;                 // n×m
  std::function<Mat(const Vec&)> jac_f;             // n×n
  std::function<Mat(const Vec&, int)> jac_b_col;    // ∂b_j/∂x, n×n

  Box state_box;
  Box control_box;

  /// Batched ẋ for X (n×P), U (m×P) on a tape.
  std::function<ad::Var(ad::Tape&, ad::Var, ad::Var)> taped_dynamics;
};

/// Planar spacecraft: m = 0.5, J = 0.005, center-of-mass offset (0.1, 0.1).
SystemSpec make_spacecraft();

/// Planar VTOL: m = 0.5, ℓ = 0.25, J = 0.005, g = 9.81.
SystemSpec make_pvtol();

SystemSpec make_system(const std::string& name);

Vec eval_dynamics(const SystemSpec& sys, const Vec& x, const Vec& u);

/// Generalized SDC factor A(x̄, e) = ∫₀¹ ∂field/∂x(x̄ + s·e) ds by
/// Gauss–Legendre quadrature along the straight-line curve. field_index 0 is
/// f; 1..m are the actuator columns b_j.
Mat sdc_oracle_factor(const SystemSpec& sys, int field_index, const Vec& xbar,
                      const Vec& e, int quadrature_order = 8);

std::vector<Vec> sample_box(const Box& box, int count, Rng& rng);

using Deriv = std::function<Vec(double, const Vec&)>;

Vec rk4_step(const Deriv& deriv, double t, const Vec& x, double dt);

struct SimResult {
  Mat states;          // n × (steps+1), including both endpoints
  double dt = 0.0;
  bool diverged = false;
  double t_diverged = 0.0;  // first grid time with a non-finite state
};

/// Fixed-step RK4 integration on the uniform grid. A non-finite state stops
/// integration and flags the result; remaining columns hold the last state.
SimResult simulate(const Deriv& deriv, const Vec& x0, double t_final,
                   double dt);

}  // namespace lcs::sys

#endif  // LCS_SYSTEMS_HPP_
