#include "lcs/controllers.hpp"

#include <stdexcept>

namespace lcs::ctrl {

AffineModel oracle_model(const sys::SystemSpec& system) {
  AffineModel model;
  model.n = system.n;
  model.m = system.m;
  model.f = system.f;
  model.b = system.b;
  model.jac_f = system.jac_f;
  model.jac_b_col = system.jac_b_col;
  return model;
}

AffineModel learned_model(const learn::DynamicsModel& dyn) {
  auto owned = std::make_shared<learn::DynamicsModel>(dyn);
  AffineModel model;
  model.n = owned->n;
  model.m = owned->m;
  model.f = [owned](const Vec& x) { return owned->f(x); };
  model.b = [owned](const Vec& x) { return owned->b(x); };
  model.jac_f = [owned](const Vec& x) { return owned->jac_f(x); };
  model.jac_b_col = [owned](const Vec& x, int j) { return owned->jac_b_col(x, j); };
  return model;
}

SdcFactors oracle_sdc_factors(const sys::SystemSpec& system) {
  auto owned = std::make_shared<sys::SystemSpec>(system);
  SdcFactors factors;
  factors.n = system.n;
  factors.m = system.m;
  factors.factor = [owned](const Vec& xbar, const Vec& e, int field_index) {
    return sys::sdc_oracle_factor(*owned, field_index, xbar, e);
  };
  return factors;
}

SdcFactors learned_sdc_factors(const learn::SdcModel& model) {
  auto owned = std::make_shared<learn::SdcModel>(model);
  SdcFactors factors;
  factors.n = model.n;
  factors.m = model.m;
  factors.factor = [owned](const Vec& xbar, const Vec& e, int field_index) {
    return owned->a_factor(field_index, xbar, e);
  };
  return factors;
}

RiccatiWeights identity_weights(int n, int m) {
  return {Mat::Identity(n, n), Mat::Identity(m, m)};
}

std::optional<Mat> RiccatiFeedback::solve(const Mat& a, const Mat& b) {
  ++attempts;
  try {
    const linalg::CareSolution sol =
        linalg::solve_care({a, b, weights_.q, weights_.r}, tol_, last_p_);
    last_p_ = sol.p;
    return sol.p;
  } catch (const linalg::CareFailure&) {
    ++failures;
    return last_p_;
  }
}

Mat RiccatiFeedback::gain(const Mat& p, const Mat& b) const {
  return weights_.r.llt().solve(b.transpose() * p);
}

void RiccatiFeedback::reset() {
  failures = 0;
  attempts = 0;
  last_p_.reset();
}

LinearizedLqr::LinearizedLqr(AffineModel model, RiccatiWeights weights,
                             double tol, std::string id)
    : model_(std::move(model)),
      riccati_(std::move(weights), tol),
      id_(std::move(id)) {}

StepPolicy LinearizedLqr::step_policy(const Vec& x, const Vec& xbar,
                                      const Vec& ubar) {
  if (x.size() != model_.n || xbar.size() != model_.n || ubar.size() != model_.m) {
    throw std::invalid_argument("lqr: dimension mismatch");
  }
  // A(x̄,ū) = ∂f/∂x(x̄) + Σ_j ū_j ∂b_j/∂x(x̄), paired with B(x̄).
  Mat a = model_.jac_f(xbar);
  for (int j = 0; j < model_.m; ++j) {
    a += ubar(j) * model_.jac_b_col(xbar, j);
  }
  const std::optional<Mat> p = riccati_.solve(a, model_.b(xbar));
  if (!p) {
    return [ubar](const Vec&) { return ubar; };
  }
  const Mat gain = riccati_.gain(*p, model_.b(xbar));
  return [ubar, xbar, gain](const Vec& xs) { return Vec(ubar - gain * (xs - xbar)); };
}

SdLqr::SdLqr(SdcFactors factors, std::function<Mat(const Vec&)> b_at_state,
             RiccatiWeights weights, double tol, std::string id)
    : factors_(std::move(factors)),
      b_at_state_(std::move(b_at_state)),
      riccati_(std::move(weights), tol),
      id_(std::move(id)) {}

StepPolicy SdLqr::step_policy(const Vec& x, const Vec& xbar, const Vec& ubar) {
  if (x.size() != factors_.n || xbar.size() != factors_.n ||
      ubar.size() != factors_.m) {
    throw std::invalid_argument("sdlqr: dimension mismatch");
  }
  const Vec e = x - xbar;
  Mat a = factors_.factor(xbar, e, 0);
  for (int j = 0; j < factors_.m; ++j) {
    a += ubar(j) * factors_.factor(xbar, e, j + 1);
  }
  const std::optional<Mat> p = riccati_.solve(a, b_at_state_(x));
  if (!p) {
    return [ubar](const Vec&) { return ubar; };
  }
  // u = ū − R⁻¹Bᵀ(x)P_SDC (x − x̄) with the step-held P.
  const Mat p_held = *p;
  auto b_fn = b_at_state_;
  RiccatiFeedback* riccati = &riccati_;
  return [ubar, xbar, p_held, b_fn, riccati](const Vec& xs) {
    return Vec(ubar - riccati->gain(p_held, b_fn(xs)) * (xs - xbar));
  };
}

CcmFeedback::CcmFeedback(learn::CcmModel model, std::string id)
    : model_(std::make_shared<learn::CcmModel>(std::move(model))),
      id_(std::move(id)) {}

StepPolicy CcmFeedback::step_policy(const Vec& x, const Vec& xbar,
                                    const Vec& ubar) {
  if (x.size() != model_->n || xbar.size() != model_->n ||
      ubar.size() != model_->m) {
    throw std::invalid_argument("ccm: dimension mismatch");
  }
  auto model = model_;
  return [ubar, xbar, model](const Vec& xs) {
    return Vec(ubar + model->feedback(xs, xbar));
  };
}

std::unique_ptr<TrackingController> make_method_controller(
    const std::string& method, const sys::SystemSpec& system,
    const learn::LoadedCheckpoint* checkpoint) {
  const RiccatiWeights weights = identity_weights(system.n, system.m);
  auto require = [&](const char* trained_as) {
    if (checkpoint == nullptr || checkpoint->info.method != trained_as) {
      throw std::invalid_argument("method " + method + " needs a '" +
                                  trained_as + "' checkpoint");
    }
  };

  if (method == "oracle-lqr") {
    return std::make_unique<LinearizedLqr>(oracle_model(system), weights, 1e-9,
                                           method);
  }
  if (method == "oracle-sdlqr") {
    return std::make_unique<SdLqr>(oracle_sdc_factors(system), system.b,
                                   weights, 1e-9, method);
  }
  if (method == "naive-lqr") {
    require("naive");
    return std::make_unique<LinearizedLqr>(learned_model(checkpoint->dyn),
                                           weights, 1e-9, method);
  }
  if (method == "sdc-sdlqr") {
    require("sdc");
    auto dyn = std::make_shared<learn::DynamicsModel>(checkpoint->dyn);
    return std::make_unique<SdLqr>(
        learned_sdc_factors(checkpoint->sdc),
        [dyn](const Vec& x) { return dyn->b(x); }, weights, 1e-9, method);
  }
  if (method == "sdc-linlqr") {
    require("sdc");
    return std::make_unique<LinearizedLqr>(learned_model(checkpoint->dyn),
                                           weights, 1e-9, method);
  }
  if (method == "ccm") {
    require("ccm");
    return std::make_unique<CcmFeedback>(checkpoint->ccm, method);
  }
  throw std::invalid_argument("unknown evaluation method: " + method);
}

}  // namespace lcs::ctrl
