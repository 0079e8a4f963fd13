#include "lcs/trajgen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lcs/controllers.hpp"
#include "lcs/csv.hpp"
#include "lcs/optim.hpp"
#include "lcs/tape.hpp"

namespace lcs::traj {

namespace {

using ad::Tape;
using ad::Var;

struct ControlClamp {
  Vec mid;
  Vec half;
};

ControlClamp clamp_for(const sys::Box& box) {
  return {0.5 * (box.upper + box.lower), 0.5 * (box.upper - box.lower)};
}

// u = mid + half ⊙ tanh(w), strictly inside the box.
Mat clamp_controls(const ControlClamp& clamp, const Mat& w) {
  return (clamp.half.asDiagonal() * w.array().tanh().matrix()).colwise() +
         clamp.mid;
}

Var taped_clamp(Tape& tape, const ControlClamp& clamp, Var w) {
  return tape.add_col(
      tape.row_scale(tape.constant(clamp.half), tape.tanh(w)),
      tape.constant(clamp.mid));
}

// Raw parameter with clamp(w) = u for u strictly inside the box.
Mat unclamp_controls(const ControlClamp& clamp, const Mat& u) {
  Mat w(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      double z = (u(i, j) - clamp.mid(i)) / clamp.half(i);
      z = std::clamp(z, -0.995, 0.995);
      w(i, j) = std::atanh(z);
    }
  }
  return w;
}

// Control that best cancels the drift at the origin, kept strictly interior.
Vec hover_control(const sys::SystemSpec& system) {
  const Vec x0 = Vec::Zero(system.n);
  const Mat b = system.b(x0);
  Vec u = b.colPivHouseholderQr().solve(-system.f(x0));
  const ControlClamp clamp = clamp_for(system.control_box);
  for (int j = 0; j < system.m; ++j) {
    const double lo = clamp.mid(j) - 0.9 * clamp.half(j);
    const double hi = clamp.mid(j) + 0.9 * clamp.half(j);
    u(j) = std::clamp(u(j), lo, hi);
  }
  return u;
}

struct Transcription {
  Var cost;        // 1×1
  Var defects;     // n × S (segment end minus next node)
  Var terminal;    // n × 1 (last node)
  Var controls;    // m × S
};

// Batched multiple-shooting rollout of all segments on the tape.
Transcription transcribe(Tape& tape, const OcpSpec& spec,
                         const OcpOptions& options, Var nodes, Var raw_w) {
  const sys::SystemSpec& system = *spec.system;
  const int n = system.n;
  const int segments = spec.segments;
  const double seg_dt = spec.horizon / segments;
  const double h = seg_dt / options.solver_substeps;

  const ControlClamp clamp = clamp_for(system.control_box);
  const Var u = taped_clamp(tape, clamp, raw_w);

  // Segment start states: fixed x0 followed by nodes 1..S−1.
  Var starts = tape.constant(spec.x0);
  if (segments > 1) {
    starts = tape.vcat(tape.transpose(starts),
                       tape.transpose(tape.block(nodes, 0, 0, n, segments - 1)));
    starts = tape.transpose(starts);
  }

  const Var qc = tape.constant(spec.q);
  const Var rc = tape.constant(spec.r);
  Var cost = tape.scalar(0.0);

  Var x = starts;
  for (int sub = 0; sub < options.solver_substeps; ++sub) {
    // Rectangle-rule state cost on the substep grid.
    cost = tape.add(cost, tape.scale(tape.sum(tape.cmul(x, tape.matmul(qc, x))), h));
    const Var k1 = system.taped_dynamics(tape, x, u);
    const Var k2 = system.taped_dynamics(
        tape, tape.add(x, tape.scale(k1, 0.5 * h)), u);
    const Var k3 = system.taped_dynamics(
        tape, tape.add(x, tape.scale(k2, 0.5 * h)), u);
    const Var k4 = system.taped_dynamics(tape, tape.add(x, tape.scale(k3, h)), u);
    const Var incr = tape.add(tape.add(k1, k4),
                              tape.scale(tape.add(k2, k3), 2.0));
    x = tape.add(x, tape.scale(incr, h / 6.0));
  }
  cost = tape.add(cost,
                  tape.scale(tape.sum(tape.cmul(u, tape.matmul(rc, u))), seg_dt));

  Transcription out;
  out.cost = cost;
  out.defects = tape.sub(x, nodes);
  out.terminal = tape.block(nodes, 0, segments - 1, n, 1);
  out.controls = u;
  return out;
}

// Fine 100 Hz rollout of piecewise-constant segment controls.
Mat integrate_fine(const sys::SystemSpec& system, const Vec& x0,
                   const Mat& seg_controls, double horizon, int grid_hz,
                   int segments) {
  const double dt = 1.0 / grid_hz;
  const int steps = static_cast<int>(std::lround(horizon * grid_hz));
  const int per_seg = steps / segments;
  Mat states(system.n, steps + 1);
  states.col(0) = x0;
  Vec x = x0;
  for (int k = 0; k < steps; ++k) {
    const int seg = std::min(k / per_seg, segments - 1);
    const Vec u = seg_controls.col(seg);
    x = sys::rk4_step(
        [&](double, const Vec& s) { return sys::eval_dynamics(system, s, u); },
        k * dt, x, dt);
    states.col(k + 1) = x;
  }
  return states;
}

Mat resample_controls(const Mat& seg_controls, int steps, int segments) {
  const int per_seg = steps / segments;
  Mat grid(seg_controls.rows(), steps + 1);
  for (int k = 0; k <= steps; ++k) {
    const int seg = std::min(k / per_seg, segments - 1);
    grid.col(k) = seg_controls.col(seg);
  }
  return grid;
}

double trajectory_cost(const OcpSpec& spec, const Mat& states,
                       const Mat& controls, double dt) {
  double cost = 0.0;
  for (Eigen::Index k = 0; k + 1 < states.cols(); ++k) {
    cost += dt * (states.col(k).dot(spec.q * states.col(k)) +
                  controls.col(k).dot(spec.r * controls.col(k)));
  }
  return cost;
}

}  // namespace

OcpSpec OcpSpec::standard(const sys::SystemSpec& system, const Vec& x0) {
  OcpSpec spec;
  spec.system = &system;
  spec.q = Mat::Identity(system.n, system.n);
  spec.r = 0.01 * Mat::Identity(system.m, system.m);
  spec.x0 = x0;
  return spec;
}

FeasibilityReport verify_feasibility(const sys::SystemSpec& system,
                                     const ReferenceTrajectory& trajectory) {
  FeasibilityReport report;
  const Mat& xs = trajectory.states;
  const Mat& us = trajectory.controls;
  for (int k = 0; k < trajectory.steps(); ++k) {
    const Vec u = us.col(k);
    const Vec next = sys::rk4_step(
        [&](double, const Vec& s) { return sys::eval_dynamics(system, s, u); },
        k * trajectory.dt, xs.col(k), trajectory.dt);
    report.max_step_defect =
        std::max(report.max_step_defect, (next - xs.col(k + 1)).norm());
  }
  report.terminal_error = xs.col(xs.cols() - 1).norm();
  for (Eigen::Index k = 0; k < us.cols(); ++k) {
    for (int j = 0; j < system.m; ++j) {
      report.max_bound_violation = std::max(
          report.max_bound_violation,
          std::max(system.control_box.lower(j) - us(j, k),
                   us(j, k) - system.control_box.upper(j)));
    }
  }
  return report;
}

std::optional<ReferenceTrajectory> solve_ocp(const OcpSpec& spec,
                                             std::uint64_t seed,
                                             const OcpOptions& options) {
  if (spec.system == nullptr || spec.segments < 2) {
    throw std::invalid_argument("solve_ocp: bad spec");
  }
  const sys::SystemSpec& system = *spec.system;
  const int n = system.n, m = system.m, segments = spec.segments;
  const int steps =
      static_cast<int>(std::lround(spec.horizon * options.grid_hz));
  if (steps % segments != 0) {
    throw std::invalid_argument("solve_ocp: grid must subdivide segments");
  }

  const ControlClamp clamp = clamp_for(system.control_box);
  const Vec u_init = hover_control(system);
  Rng rng = Rng(seed).split(0xc0ffee);

  for (int attempt = 0; attempt < 2; ++attempt) {
    // Straight-line node initialization toward the origin; jitter on retry.
    Mat nodes_value(n, segments);
    for (int k = 1; k <= segments; ++k) {
      nodes_value.col(k - 1) =
          spec.x0 * (1.0 - static_cast<double>(k) / segments);
    }
    Mat w_value = unclamp_controls(clamp, u_init.replicate(1, segments));
    if (attempt > 0) {
      for (Eigen::Index i = 0; i < nodes_value.size(); ++i) {
        nodes_value.data()[i] += 0.01 * (2.0 * rng.unit() - 1.0);
      }
      for (Eigen::Index i = 0; i < w_value.size(); ++i) {
        w_value.data()[i] += 0.1 * (2.0 * rng.unit() - 1.0);
      }
    }

    Mat lambda = Mat::Zero(n, segments);
    Vec lambda_t = Vec::Zero(n);
    double mu = options.mu_initial;
    double best_infeasibility = std::numeric_limits<double>::infinity();

    Tape tape;
    for (int outer = 0; outer < options.outer_iterations; ++outer) {
      // Tighter inner solves as the penalty stiffens: decay the step size
      // across outers and within the inner loop.
      const double lr_outer =
          std::max(options.inner_lr * std::pow(options.lr_decay, outer),
                   1e-4 * options.inner_lr);
      ad::AdamState adam_nodes(nodes_value.size(), lr_outer);
      ad::AdamState adam_w(w_value.size(), lr_outer);
      Vec theta_nodes = Eigen::Map<const Vec>(nodes_value.data(), nodes_value.size());
      Vec theta_w = Eigen::Map<const Vec>(w_value.data(), w_value.size());

      for (int inner = 0; inner < options.inner_iterations; ++inner) {
        const double anneal =
            1.0 - 0.9 * static_cast<double>(inner) / options.inner_iterations;
        adam_nodes.learning_rate = lr_outer * anneal;
        adam_w.learning_rate = lr_outer * anneal;
        tape.clear();
        const Var nodes = tape.leaf(nodes_value);
        const Var raw_w = tape.leaf(w_value);
        const Transcription tr = transcribe(tape, spec, options, nodes, raw_w);

        // Augmented Lagrangian over defects and the terminal constraint.
        Var obj = tr.cost;
        obj = tape.add(obj, tape.sum(tape.cmul(tape.constant(lambda), tr.defects)));
        obj = tape.add(obj, tape.scale(tape.sum_sq(tr.defects), 0.5 * mu));
        obj = tape.add(obj, tape.sum(tape.cmul(tape.constant(Mat(lambda_t)),
                                               tr.terminal)));
        obj = tape.add(obj, tape.scale(tape.sum_sq(tr.terminal), 0.5 * mu));

        tape.backward(obj);
        const Mat& g_nodes = tape.adjoint(nodes);
        const Mat& g_w = tape.adjoint(raw_w);
        Vec gn = Eigen::Map<const Vec>(g_nodes.data(), g_nodes.size());
        Vec gw = Eigen::Map<const Vec>(g_w.data(), g_w.size());
        adam_nodes.step(theta_nodes, gn);
        adam_w.step(theta_w, gw);
        nodes_value = Eigen::Map<const Mat>(theta_nodes.data(), n, segments);
        w_value = Eigen::Map<const Mat>(theta_w.data(), m, segments);
        if (!nodes_value.allFinite() || !w_value.allFinite()) break;
      }
      if (!nodes_value.allFinite() || !w_value.allFinite()) break;

      // Constraint values at the inner solution.
      tape.clear();
      const Var nodes = tape.leaf(nodes_value);
      const Var raw_w = tape.leaf(w_value);
      const Transcription tr = transcribe(tape, spec, options, nodes, raw_w);
      const Mat defects = tape.value(tr.defects);
      const Vec terminal = tape.value(tr.terminal).col(0);

      // Candidate fine trajectory; accept as soon as it verifies.
      const Mat seg_controls = clamp_controls(clamp, w_value);
      ReferenceTrajectory candidate;
      candidate.dt = 1.0 / options.grid_hz;
      candidate.states = integrate_fine(system, spec.x0, seg_controls,
                                        spec.horizon, options.grid_hz, segments);
      candidate.controls = resample_controls(seg_controls, steps, segments);
      candidate.report = verify_feasibility(system, candidate);
      candidate.cost =
          trajectory_cost(spec, candidate.states, candidate.controls, candidate.dt);
      if (candidate.states.allFinite() &&
          candidate.report.feasible(options.defect_tol, options.terminal_tol)) {
        return candidate;
      }

      const double infeasibility =
          std::max(defects.cwiseAbs().maxCoeff(), terminal.cwiseAbs().maxCoeff());
      if (options.verbose) {
        std::fprintf(stderr,
                     "ocp outer %d: cost %.4g defect %.3g terminal %.3g "
                     "resim-terminal %.3g mu %.3g\n",
                     outer, tape.value(tr.cost)(0, 0),
                     defects.cwiseAbs().maxCoeff(), terminal.norm(),
                     candidate.report.terminal_error, mu);
      }
      lambda += mu * defects;
      lambda_t += mu * terminal;
      if (infeasibility > 0.5 * best_infeasibility) {
        mu = std::min(mu * options.mu_growth, options.mu_max);
      }
      best_infeasibility = std::min(best_infeasibility, infeasibility);
    }
  }
  return std::nullopt;
}

std::vector<ReferenceTrajectory> make_test_set(const sys::SystemSpec& system,
                                               int count, std::uint64_t seed,
                                               const OcpOptions& options) {
  std::vector<ReferenceTrajectory> trajectories;
  Rng rng = Rng(seed).split(0x7e57);
  int attempts = 0;
  const int max_attempts = std::max(20, 20 * count);
  while (static_cast<int>(trajectories.size()) < count &&
         attempts < max_attempts) {
    Vec x0(system.n);
    for (int d = 0; d < system.n; ++d) {
      x0(d) = rng.uniform(system.state_box.lower(d), system.state_box.upper(d));
    }
    ++attempts;
    const OcpSpec spec = OcpSpec::standard(system, x0);
    if (auto trajectory = solve_ocp(spec, rng.split(attempts).seed(), options)) {
      trajectories.push_back(std::move(*trajectory));
    }
  }
  if (static_cast<int>(trajectories.size()) < count) {
    throw std::runtime_error("make_test_set: too many infeasible solves");
  }
  return trajectories;
}

learn::LabelledDataset collect_onpolicy(const sys::SystemSpec& system,
                                        int n_traj, std::uint64_t seed,
                                        const OcpOptions& options) {
  const int per_traj = static_cast<int>(std::lround(5.0 * options.grid_hz));
  learn::LabelledDataset data;
  data.x.resize(system.n, per_traj * n_traj);
  data.u.resize(system.m, per_traj * n_traj);
  data.xdot.resize(system.n, per_traj * n_traj);
  if (n_traj == 0) return data;

  // Distinct seed stream from the test set.
  Rng rng = Rng(seed).split(0x0e11c7);
  std::vector<ReferenceTrajectory> trajectories;
  int attempts = 0;
  while (static_cast<int>(trajectories.size()) < n_traj && attempts < 20 * n_traj) {
    Vec x0(system.n);
    for (int d = 0; d < system.n; ++d) {
      x0(d) = rng.uniform(system.state_box.lower(d), system.state_box.upper(d));
    }
    ++attempts;
    const OcpSpec spec = OcpSpec::standard(system, x0);
    if (auto trajectory = solve_ocp(spec, rng.split(1000 + attempts).seed(), options)) {
      trajectories.push_back(std::move(*trajectory));
    }
  }
  if (static_cast<int>(trajectories.size()) < n_traj) {
    throw std::runtime_error("collect_onpolicy: too many infeasible solves");
  }

  int col = 0;
  for (int t = 0; t < n_traj; ++t) {
    const ReferenceTrajectory& ref = trajectories[t];
    ctrl::LinearizedLqr controller(ctrl::oracle_model(system),
                                   ctrl::identity_weights(system.n, system.m));
    Vec x(system.n);
    do {
      for (int d = 0; d < system.n; ++d) {
        x(d) = rng.uniform(system.state_box.lower(d), system.state_box.upper(d));
      }
    } while ((x - ref.states.col(0)).norm() == 0.0);

    for (int k = 0; k < per_traj; ++k) {
      const ctrl::StepPolicy policy =
          controller.step_policy(x, ref.states.col(k), ref.controls.col(k));
      const Vec u = policy(x);
      data.x.col(col) = x;
      data.u.col(col) = u;
      data.xdot.col(col) = sys::eval_dynamics(system, x, u);
      ++col;
      x = sys::rk4_step(
          [&](double, const Vec& s) {
            return sys::eval_dynamics(system, s, policy(s));
          },
          k * ref.dt, x, ref.dt);
    }
  }
  return data;
}

void ReferenceTrajectory::save_csv(const std::string& path) const {
  const int n = static_cast<int>(states.rows());
  const int m = static_cast<int>(controls.rows());
  csv::Table table;
  table.header.push_back("t");
  for (const std::string& name : csv::numbered("x", n)) table.header.push_back(name);
  for (const std::string& name : csv::numbered("u", m)) table.header.push_back(name);
  table.rows.resize(states.cols(), 1 + n + m);
  for (Eigen::Index k = 0; k < states.cols(); ++k) {
    table.rows(k, 0) = k * dt;
    table.rows.block(k, 1, 1, n) = states.col(k).transpose();
    table.rows.block(k, 1 + n, 1, m) = controls.col(k).transpose();
  }
  table.save(path);
}

ReferenceTrajectory ReferenceTrajectory::load_csv(const std::string& path,
                                                  int n, int m) {
  csv::Table table = csv::Table::load(path);
  std::vector<std::string> want = {"t"};
  for (const std::string& name : csv::numbered("x", n)) want.push_back(name);
  for (const std::string& name : csv::numbered("u", m)) want.push_back(name);
  if (table.header != want) {
    throw std::runtime_error("trajectory csv: unexpected header in " + path);
  }
  ReferenceTrajectory out;
  const Eigen::Index rows = table.rows.rows();
  if (rows < 2) throw std::runtime_error("trajectory csv: too short: " + path);
  out.dt = table.rows(1, 0) - table.rows(0, 0);
  out.states = table.rows.middleCols(1, n).transpose();
  out.controls = table.rows.middleCols(1 + n, m).transpose();
  return out;
}

void save_trajectory_index(const std::string& path,
                           const std::vector<ReferenceTrajectory>& trajectories,
                           std::uint64_t seed) {
  nlohmann::json doc;
  doc["seed"] = seed;
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const FeasibilityReport& report = trajectories[i].report;
    list.push_back({{"id", i},
                    {"max_step_defect", report.max_step_defect},
                    {"terminal_error", report.terminal_error},
                    {"max_bound_violation", report.max_bound_violation},
                    {"cost", trajectories[i].cost}});
  }
  doc["trajectories"] = std::move(list);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace lcs::traj
