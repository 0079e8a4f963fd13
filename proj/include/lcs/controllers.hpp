#ifndef LCS_CONTROLLERS_HPP_
#define LCS_CONTROLLERS_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "lcs/linalg.hpp"
#include "lcs/models.hpp"
#include "lcs/systems.hpp"

namespace lcs::ctrl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Uniform view of a control-affine model (true or learned): values of f and
/// B plus Jacobians of f and the actuator columns.
struct AffineModel {
  int n = 0;
  int m = 0;
  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> b;
  std::function<Mat(const Vec&)> jac_f;
  std::function<Mat(const Vec&, int)> jac_b_col;
};

AffineModel oracle_model(const sys::SystemSpec& system);
AffineModel learned_model(const learn::DynamicsModel& model);

/// Source of generalized SDC factors A₀, A_j.
struct SdcFactors {
  int n = 0;
  int m = 0;
  std::function<Mat(const Vec& xbar, const Vec& e, int field_index)> factor;
};

SdcFactors oracle_sdc_factors(const sys::SystemSpec& system);
SdcFactors learned_sdc_factors(const learn::SdcModel& model);

/// Control law held over one grid step, evaluated at integrator stage states.
using StepPolicy = std::function<Vec(const Vec&)>;

/// Tracking policy u = π(x, x̄, ū). Gains are recomputed once per grid step
/// (step_policy); the returned law is applied continuously within the step.
/// A controller instance carries its own gain cache and failure counters and
/// belongs to a single rollout.
class TrackingController {
 public:
  virtual ~TrackingController() = default;
  virtual StepPolicy step_policy(const Vec& x, const Vec& xbar,
                                 const Vec& ubar) = 0;
  Vec control(const Vec& x, const Vec& xbar, const Vec& ubar) {
    return step_policy(x, xbar, ubar)(x);
  }
  virtual std::string id() const = 0;
  virtual int solver_failures() const { return 0; }
  virtual int solve_attempts() const { return 0; }
  virtual void reset() {}
};

struct RiccatiWeights {
  Mat q;  // default I_n
  Mat r;  // default I_m
};

RiccatiWeights identity_weights(int n, int m);

/// Riccati solve stage shared by the LQR controllers: returns the fresh
/// stabilizing solution, or the cached one when a solve fails mid-rollout.
class RiccatiFeedback {
 public:
  RiccatiFeedback(RiccatiWeights weights, double tol)
      : weights_(std::move(weights)), tol_(tol) {}

  /// P for the pair (a, b); cached P on failure, nullopt with no cache.
  std::optional<Mat> solve(const Mat& a, const Mat& b);

  /// R⁻¹BᵀP.
  Mat gain(const Mat& p, const Mat& b) const;

  int failures = 0;
  int attempts = 0;
  void reset();

 private:
  RiccatiWeights weights_;
  double tol_;
  std::optional<Mat> last_p_;
};

class LinearizedLqr : public TrackingController {
 public:
  LinearizedLqr(AffineModel model, RiccatiWeights weights, double tol = 1e-9,
                std::string id = "lqr");
  StepPolicy step_policy(const Vec& x, const Vec& xbar, const Vec& ubar) override;
  std::string id() const override { return id_; }
  int solver_failures() const override { return riccati_.failures; }
  int solve_attempts() const override { return riccati_.attempts; }
  void reset() override { riccati_.reset(); }

 private:
  AffineModel model_;
  RiccatiFeedback riccati_;
  std::string id_;
};

/// SD-LQR: solves the state-dependent Riccati equation in
/// (A_SDC(x̄,ū,e), B(x)) once per step.
class SdLqr : public TrackingController {
 public:
  SdLqr(SdcFactors factors, std::function<Mat(const Vec&)> b_at_state,
        RiccatiWeights weights, double tol = 1e-9, std::string id = "sdlqr");
  StepPolicy step_policy(const Vec& x, const Vec& xbar, const Vec& ubar) override;
  std::string id() const override { return id_; }
  int solver_failures() const override { return riccati_.failures; }
  int solve_attempts() const override { return riccati_.attempts; }
  void reset() override { riccati_.reset(); }

 private:
  SdcFactors factors_;
  std::function<Mat(const Vec&)> b_at_state_;
  RiccatiFeedback riccati_;
  std::string id_;
};

class CcmFeedback : public TrackingController {
 public:
  explicit CcmFeedback(learn::CcmModel model, std::string id = "ccm");
  StepPolicy step_policy(const Vec& x, const Vec& xbar, const Vec& ubar) override;
  std::string id() const override { return id_; }

 private:
  std::shared_ptr<learn::CcmModel> model_;
  std::string id_;
};

/// Builds the controller for an evaluation method name:
///   oracle-lqr, oracle-sdlqr, naive-lqr, sdc-sdlqr, sdc-linlqr, ccm.
/// Learned methods need a checkpoint trained with the matching method
/// (sdc-linlqr reuses the (f,B) networks of an sdc checkpoint).
std::unique_ptr<TrackingController> make_method_controller(
    const std::string& method, const sys::SystemSpec& system,
    const learn::LoadedCheckpoint* checkpoint);

}  // namespace lcs::ctrl

#endif  // LCS_CONTROLLERS_HPP_
