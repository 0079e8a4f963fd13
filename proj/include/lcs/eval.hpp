#ifndef LCS_EVAL_HPP_
#define LCS_EVAL_HPP_

#include <string>
#include <vector>

#include "lcs/controllers.hpp"
#include "lcs/trajgen.hpp"

namespace lcs::bench {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// One closed-loop rollout of a controller against a reference trajectory.
struct EvalRecord {
  std::string method;
  std::string system;
  int labelled_size = 0;  // N of the training set behind the controller
  std::uint64_t seed = 0;
  int traj_id = 0;
  double dt = 0.01;
  Vec norm_error;         // ‖e(t)‖₂/‖e(0)‖₂ on the grid
  double e0_norm = 0.0;
  bool diverged = false;
  double t_diverged = 0.0;
  int solver_failures = 0;
  int solver_attempts = 0;

  double rms = 0.0;       // filled by rms() for convenience

  /// One file per record; JSON with the normalized-error series inline.
  void save_json(const std::string& path) const;
  static EvalRecord load_json(const std::string& path);
};

/// Simulates ẋ = f_true(x) + B_true(x)·π(x, x̄(t), ū(t)) at the grid rate with
/// the reference held piecewise constant between grid points. x0 must differ
/// from x̄(0). Divergence is flagged on the record, not thrown.
EvalRecord rollout(ctrl::TrackingController& controller,
                   const sys::SystemSpec& system,
                   const traj::ReferenceTrajectory& trajectory, const Vec& x0);

/// √((1/T)·∫₀ᵀ ‖e‖²/‖e(0)‖² dt) by trapezoidal quadrature on the grid.
double rms(const EvalRecord& record);

/// Linear-interpolation quantile (Hazen convention, h = n·p + 1/2).
double quantile(std::vector<double> values, double p);

struct SeedAverage {
  std::string method;
  int labelled_size = 0;
  std::uint64_t seed = 0;
  double avg_rms = 0.0;   // mean RMS over non-diverged rollouts
  int total = 0;
  int diverged = 0;
};

struct GroupSummary {
  std::string method;
  int labelled_size = 0;
  double median_rms = 0.0;  // across seeds of the per-seed averages
  double q1_rms = 0.0;
  double q3_rms = 0.0;
  int records = 0;
  int diverged = 0;
  int solver_failures = 0;
  int flagged_rollouts = 0;  // rollouts with > 5% failed solves
};

struct RmsSummary {
  std::vector<SeedAverage> per_seed;
  std::vector<GroupSummary> per_group;
};

/// Per-seed Eq.-style averages and per-(method, N) medians/IQRs across seeds.
/// Diverged rollouts are excluded from averages and medians but counted.
RmsSummary summarize(const std::vector<EvalRecord>& records);

/// Pointwise medians/IQRs of the normalized error across a group's records.
struct TimeProfile {
  Vec times;
  Vec median;
  Vec q1;
  Vec q3;
  int records = 0;
};

TimeProfile time_profile(const std::vector<const EvalRecord*>& records);

}  // namespace lcs::bench

#endif  // LCS_EVAL_HPP_
