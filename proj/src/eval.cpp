#include "lcs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

namespace lcs::bench {

EvalRecord rollout(ctrl::TrackingController& controller,
                   const sys::SystemSpec& system,
                   const traj::ReferenceTrajectory& trajectory, const Vec& x0) {
  const int steps = trajectory.steps();
  const Vec e0 = x0 - trajectory.states.col(0);
  if (e0.norm() == 0.0) {
    throw std::invalid_argument("rollout: x0 must differ from the reference start");
  }

  EvalRecord record;
  record.method = controller.id();
  record.system = system.name;
  record.dt = trajectory.dt;
  record.e0_norm = e0.norm();
  record.norm_error.resize(steps + 1);

  Vec x = x0;
  for (int k = 0; k <= steps; ++k) {
    record.norm_error(k) = (x - trajectory.states.col(k)).norm() / record.e0_norm;
    if (k == steps) break;
    // Gains held over the step; the law itself sees the stage states.
    const ctrl::StepPolicy policy = controller.step_policy(
        x, trajectory.states.col(k), trajectory.controls.col(k));
    if (!policy(x).allFinite()) {
      record.diverged = true;
      record.t_diverged = k * trajectory.dt;
      for (int r = k + 1; r <= steps; ++r) record.norm_error(r) = record.norm_error(k);
      break;
    }
    x = sys::rk4_step(
        [&](double, const Vec& s) {
          return sys::eval_dynamics(system, s, policy(s));
        },
        k * trajectory.dt, x, trajectory.dt);
    if (!x.allFinite() || x.norm() > 1e9) {
      record.diverged = true;
      record.t_diverged = (k + 1) * trajectory.dt;
      for (int r = k + 1; r <= steps; ++r) record.norm_error(r) = record.norm_error(k);
      break;
    }
  }
  record.solver_failures = controller.solver_failures();
  record.solver_attempts = controller.solve_attempts();
  if (!record.diverged) record.rms = rms(record);
  return record;
}

double rms(const EvalRecord& record) {
  if (record.e0_norm == 0.0) {
    throw std::invalid_argument("rms: undefined for e(0) = 0");
  }
  const Vec& ne = record.norm_error;
  const int steps = static_cast<int>(ne.size()) - 1;
  const double horizon = steps * record.dt;
  double integral = 0.0;
  for (int k = 0; k < steps; ++k) {
    integral += 0.5 * record.dt * (ne(k) * ne(k) + ne(k + 1) * ne(k + 1));
  }
  return std::sqrt(integral / horizon);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double h = n * p + 0.5;  // 1-based position
  const double lo = std::clamp(std::floor(h), 1.0, n);
  const double hi = std::clamp(lo + 1.0, 1.0, n);
  const double frac = std::clamp(h - lo, 0.0, 1.0);
  const double a = values[static_cast<std::size_t>(lo) - 1];
  const double b = values[static_cast<std::size_t>(hi) - 1];
  return a + frac * (b - a);
}

RmsSummary summarize(const std::vector<EvalRecord>& records) {
  RmsSummary summary;

  std::map<std::tuple<std::string, int, std::uint64_t>, std::vector<const EvalRecord*>>
      by_seed;
  for (const EvalRecord& record : records) {
    by_seed[{record.method, record.labelled_size, record.seed}].push_back(&record);
  }
  for (const auto& [key, group] : by_seed) {
    SeedAverage avg;
    avg.method = std::get<0>(key);
    avg.labelled_size = std::get<1>(key);
    avg.seed = std::get<2>(key);
    double sum = 0.0;
    int counted = 0;
    for (const EvalRecord* record : group) {
      ++avg.total;
      if (record->diverged) {
        ++avg.diverged;
      } else {
        sum += record->rms;
        ++counted;
      }
    }
    avg.avg_rms = counted > 0 ? sum / counted
                              : std::numeric_limits<double>::quiet_NaN();
    summary.per_seed.push_back(std::move(avg));
  }

  std::map<std::pair<std::string, int>, std::vector<const SeedAverage*>> by_group;
  for (const SeedAverage& avg : summary.per_seed) {
    by_group[{avg.method, avg.labelled_size}].push_back(&avg);
  }
  for (const auto& [key, group] : by_group) {
    GroupSummary gs;
    gs.method = key.first;
    gs.labelled_size = key.second;
    std::vector<double> values;
    for (const SeedAverage* avg : group) {
      if (std::isfinite(avg->avg_rms)) values.push_back(avg->avg_rms);
      gs.records += avg->total;
      gs.diverged += avg->diverged;
    }
    if (!values.empty()) {
      gs.median_rms = quantile(values, 0.5);
      gs.q1_rms = quantile(values, 0.25);
      gs.q3_rms = quantile(values, 0.75);
    } else {
      gs.median_rms = gs.q1_rms = gs.q3_rms =
          std::numeric_limits<double>::quiet_NaN();
    }
    for (const EvalRecord& record : records) {
      if (record.method == gs.method && record.labelled_size == gs.labelled_size) {
        gs.solver_failures += record.solver_failures;
        if (record.solver_attempts > 0 &&
            record.solver_failures > 0.05 * record.solver_attempts) {
          ++gs.flagged_rollouts;
        }
      }
    }
    summary.per_group.push_back(std::move(gs));
  }
  return summary;
}

TimeProfile time_profile(const std::vector<const EvalRecord*>& records) {
  TimeProfile profile;
  std::vector<const EvalRecord*> usable;
  for (const EvalRecord* record : records) {
    if (!record->diverged) usable.push_back(record);
  }
  if (usable.empty()) return profile;
  const int len = static_cast<int>(usable.front()->norm_error.size());
  profile.times.resize(len);
  profile.median.resize(len);
  profile.q1.resize(len);
  profile.q3.resize(len);
  profile.records = static_cast<int>(usable.size());
  for (int k = 0; k < len; ++k) {
    std::vector<double> values;
    values.reserve(usable.size());
    for (const EvalRecord* record : usable) {
      values.push_back(record->norm_error(k));
    }
    profile.times(k) = k * usable.front()->dt;
    profile.median(k) = quantile(values, 0.5);
    profile.q1(k) = quantile(values, 0.25);
    profile.q3(k) = quantile(values, 0.75);
  }
  return profile;
}

void EvalRecord::save_json(const std::string& path) const {
  nlohmann::json doc;
  doc["method"] = method;
  doc["system"] = system;
  doc["N"] = labelled_size;
  doc["seed"] = seed;
  doc["traj_id"] = traj_id;
  doc["dt"] = dt;
  doc["e0_norm"] = e0_norm;
  doc["diverged"] = diverged;
  doc["t_diverged"] = t_diverged;
  doc["solver_failures"] = solver_failures;
  doc["solver_attempts"] = solver_attempts;
  doc["rms"] = rms;
  std::vector<double> series(norm_error.data(), norm_error.data() + norm_error.size());
  doc["norm_error"] = std::move(series);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump() << "\n";
}

EvalRecord EvalRecord::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  EvalRecord record;
  record.method = doc.at("method").get<std::string>();
  record.system = doc.at("system").get<std::string>();
  record.labelled_size = doc.at("N").get<int>();
  record.seed = doc.at("seed").get<std::uint64_t>();
  record.traj_id = doc.at("traj_id").get<int>();
  record.dt = doc.at("dt").get<double>();
  record.e0_norm = doc.at("e0_norm").get<double>();
  record.diverged = doc.at("diverged").get<bool>();
  record.t_diverged = doc.at("t_diverged").get<double>();
  record.solver_failures = doc.at("solver_failures").get<int>();
  record.solver_attempts = doc.at("solver_attempts").get<int>();
  record.rms = doc.at("rms").get<double>();
  const std::vector<double> series = doc.at("norm_error").get<std::vector<double>>();
  record.norm_error =
      Eigen::Map<const Vec>(series.data(), static_cast<Eigen::Index>(series.size()));
  return record;
}

}  // namespace lcs::bench
