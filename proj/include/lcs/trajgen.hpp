#ifndef LCS_TRAJGEN_HPP_
#define LCS_TRAJGEN_HPP_

#include <optional>
#include <string>
#include <vector>

#include "lcs/dataset.hpp"
#include "lcs/systems.hpp"

namespace lcs::traj {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Quadratic-cost OCP to the origin over a fixed horizon with box-bounded
/// controls, transcribed by direct multiple shooting.
struct OcpSpec {
  const sys::SystemSpec* system = nullptr;
  double horizon = 5.0;
  int segments = 50;
  Mat q;  // default I
  Mat r;  // default 0.01·I
  Vec x0;

  static OcpSpec standard(const sys::SystemSpec& system, const Vec& x0);
};

struct FeasibilityReport {
  double max_step_defect = 0.0;
  double terminal_error = 0.0;
  double max_bound_violation = 0.0;

  bool feasible(double defect_tol = 1e-4, double terminal_tol = 1e-2) const {
    return max_step_defect <= defect_tol && terminal_error <= terminal_tol &&
           max_bound_violation <= 0.0;
  }
};

/// Reference pair (x̄(t), ū(t)) on the 100 Hz grid; controls are piecewise
/// constant per shooting segment, resampled to the grid.
struct ReferenceTrajectory {
  double dt = 0.01;
  Mat states;    // n × (K+1)
  Mat controls;  // m × (K+1), last column repeats the final segment control
  FeasibilityReport report;
  double cost = 0.0;

  int steps() const { return static_cast<int>(states.cols()) - 1; }
  double horizon() const { return steps() * dt; }

  void save_csv(const std::string& path) const;
  static ReferenceTrajectory load_csv(const std::string& path, int n, int m);
};

struct OcpOptions {
  int solver_substeps = 2;     // RK4 substeps per segment in the transcription
  int inner_iterations = 500;
  int outer_iterations = 30;
  double inner_lr = 0.05;
  double lr_decay = 0.75;      // per outer iteration, floored at 1e-4·inner_lr
  double mu_initial = 10.0;
  double mu_growth = 2.0;
  double mu_max = 1e7;
  double defect_tol = 1e-4;
  double terminal_tol = 1e-2;
  int grid_hz = 100;
  bool verbose = false;
};

/// Recomputes the feasibility report by independent re-simulation of the
/// stored controls through the true dynamics.
FeasibilityReport verify_feasibility(const sys::SystemSpec& system,
                                     const ReferenceTrajectory& trajectory);

/// Multiple shooting with a smooth clamp onto the control bounds and an
/// augmented-Lagrangian outer loop around Adam. Returns nullopt when the
/// feasibility report cannot be met from this initial condition.
std::optional<ReferenceTrajectory> solve_ocp(const OcpSpec& spec,
                                             std::uint64_t seed,
                                             const OcpOptions& options = {});

/// N feasible trajectories from initial conditions sampled uniformly from the
/// state box, resampling on infeasibility.
std::vector<ReferenceTrajectory> make_test_set(const sys::SystemSpec& system,
                                               int count, std::uint64_t seed,
                                               const OcpOptions& options = {});

/// On-policy data: oracle linearized LQR tracks freshly generated feasible
/// trajectories from perturbed starts; samples are collected at the grid rate
/// so the dataset holds exactly 500·n_traj triples.
learn::LabelledDataset collect_onpolicy(const sys::SystemSpec& system,
                                        int n_traj, std::uint64_t seed,
                                        const OcpOptions& options = {});

void save_trajectory_index(const std::string& path,
                           const std::vector<ReferenceTrajectory>& trajectories,
                           std::uint64_t seed);

}  // namespace lcs::traj

#endif  // LCS_TRAJGEN_HPP_
