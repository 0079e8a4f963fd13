#include "lcs/systems.hpp"

#include <cmath>
#include <stdexcept>

namespace lcs::sys {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 8-point Gauss–Legendre nodes/weights on [-1, 1].
constexpr int kGlOrder = 8;
constexpr double kGlNodes[kGlOrder] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeights[kGlOrder] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

struct SpacecraftParams {
  double m = 0.5;
  double j = 0.005;
  double dx = 0.1;
  double dy = 0.1;
};

struct PvtolParams {
  double m = 0.5;
  double l = 0.25;
  double j = 0.005;
  double g = 9.81;
};

Mat spacecraft_b(const SpacecraftParams& p) {
  Mat b = Mat::Zero(6, 3);
  b.row(3) << p.j + p.dy * p.dy, -p.dx * p.dy, p.dy;
  b.row(4) << -p.dx * p.dy, p.j + p.dx * p.dx, -p.dx;
  b.row(5) << p.m * p.dy, -p.m * p.dx, p.m;
  return b / (p.m * p.j);
}

Mat pvtol_b(const PvtolParams& p) {
  Mat b = Mat::Zero(6, 2);
  b(4, 0) = 1.0 / p.m;
  b(4, 1) = 1.0 / p.m;
  b(5, 0) = p.l / p.j;
  b(5, 1) = -p.l / p.j;
  return b;
}

}  // namespace

SystemSpec make_spacecraft() {
  const SpacecraftParams p;
  const Mat b = spacecraft_b(p);

  SystemSpec sys;
  sys.name = "spacecraft";
  sys.n = 6;
  sys.m = 3;

  sys.f = [p](const Vec& x) {
    Vec f(6);
    const double w = x(5);
    f << x(3), x(4), x(5), w * w * p.dx, w * w * p.dy, 0.0;
    return Vec((1.0 / p.m) * f);
  };
  sys.b = [b](const Vec&) { return b; };
  sys.jac_f = [p](const Vec& x) {
    Mat j = Mat::Zero(6, 6);
    const double w = x(5);
    j(0, 3) = 1.0;
    j(1, 4) = 1.0;
    j(2, 5) = 1.0;
    j(3, 5) = 2.0 * w * p.dx;
    j(4, 5) = 2.0 * w * p.dy;
    return Mat(j / p.m);
  };
  sys.jac_b_col = [](const Vec&, int) { return Mat::Zero(6, 6); };

  sys.state_box.lower = -(Vec(6) << 1, 1, kPi, 0.2, 0.2, 0.25).finished();
  sys.state_box.upper = (Vec(6) << 1, 1, kPi, 0.2, 0.2, 0.25).finished();
  sys.control_box.lower = -(Vec(3) << 1, 1, 0.1).finished();
  sys.control_box.upper = (Vec(3) << 1, 1, 0.1).finished();

  sys.taped_dynamics = [p, b](ad::Tape& tape, ad::Var x, ad::Var u) {
    const int cols = static_cast<int>(tape.value(x).cols());
    ad::Var vel = tape.block(x, 3, 0, 3, cols);
    ad::Var w = tape.block(x, 5, 0, 1, cols);
    ad::Var w2 = tape.cmul(w, w);
    ad::Var f = tape.vcat(
        tape.scale(vel, 1.0 / p.m),
        tape.vcat(tape.scale(w2, p.dx / p.m),
                  tape.vcat(tape.scale(w2, p.dy / p.m),
                            tape.constant(Mat::Zero(1, cols)))));
    return tape.add(f, tape.matmul(tape.constant(b), u));
  };
  return sys;
}

SystemSpec make_pvtol() {
  const PvtolParams p;
  const Mat b = pvtol_b(p);

  SystemSpec sys;
  sys.name = "pvtol";
  sys.n = 6;
  sys.m = 2;

  sys.f = [p](const Vec& x) {
    const double phi = x(2), vx = x(3), vy = x(4), om = x(5);
    const double c = std::cos(phi), s = std::sin(phi);
    Vec f(6);
    f << vx * c - vy * s, vx * s + vy * c, om, vy * om - p.g * s,
        -vx * om - p.g * c, 0.0;
    return f;
  };
  sys.b = [b](const Vec&) { return b; };
  sys.jac_f = [p](const Vec& x) {
    const double phi = x(2), vx = x(3), vy = x(4), om = x(5);
    const double c = std::cos(phi), s = std::sin(phi);
    Mat j = Mat::Zero(6, 6);
    j(0, 2) = -vx * s - vy * c;
    j(0, 3) = c;
    j(0, 4) = -s;
    j(1, 2) = vx * c - vy * s;
    j(1, 3) = s;
    j(1, 4) = c;
    j(2, 5) = 1.0;
    j(3, 2) = -p.g * c;
    j(3, 4) = om;
    j(3, 5) = vy;
    j(4, 2) = p.g * s;
    j(4, 3) = -om;
    j(4, 5) = -vx;
    return j;
  };
  sys.jac_b_col = [](const Vec&, int) { return Mat::Zero(6, 6); };

  sys.state_box.lower =
      -(Vec(6) << 10, 10, kPi / 3, 2, 1, kPi / 3).finished();
  sys.state_box.upper =
      (Vec(6) << 10, 10, kPi / 3, 2, 1, kPi / 3).finished();
  const double mg = p.m * p.g;
  sys.control_box.lower = (Vec(2) << 0.1 * mg, 0.1 * mg).finished();
  sys.control_box.upper = (Vec(2) << 2.0 * mg, 2.0 * mg).finished();

  sys.taped_dynamics = [p, b](ad::Tape& tape, ad::Var x, ad::Var u) {
    const int cols = static_cast<int>(tape.value(x).cols());
    ad::Var phi = tape.block(x, 2, 0, 1, cols);
    ad::Var vx = tape.block(x, 3, 0, 1, cols);
    ad::Var vy = tape.block(x, 4, 0, 1, cols);
    ad::Var om = tape.block(x, 5, 0, 1, cols);
    ad::Var c = tape.cos(phi);
    ad::Var s = tape.sin(phi);
    ad::Var r0 = tape.sub(tape.cmul(vx, c), tape.cmul(vy, s));
    ad::Var r1 = tape.add(tape.cmul(vx, s), tape.cmul(vy, c));
    ad::Var r3 = tape.sub(tape.cmul(vy, om), tape.scale(s, p.g));
    ad::Var r4 = tape.neg(tape.add(tape.cmul(vx, om), tape.scale(c, p.g)));
    ad::Var f = tape.vcat(
        r0, tape.vcat(r1, tape.vcat(om, tape.vcat(r3, tape.vcat(r4, tape.constant(Mat::Zero(1, cols)))))));
    return tape.add(f, tape.matmul(tape.constant(b), u));
  };
  return sys;
}

SystemSpec make_system(const std::string& name) {
  if (name == "spacecraft") return make_spacecraft();
  if (name == "pvtol") return make_pvtol();
  throw std::invalid_argument("unknown system: " + name);
}

Vec eval_dynamics(const SystemSpec& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.n || u.size() != sys.m) {
    throw std::invalid_argument("eval_dynamics: dimension mismatch");
  }
  return sys.f(x) + sys.b(x) * u;
}

Mat sdc_oracle_factor(const SystemSpec& sys, int field_index, const Vec& xbar,
                      const Vec& e, int quadrature_order) {
  if (field_index < 0 || field_index > sys.m) {
    throw std::invalid_argument("sdc_oracle_factor: field index out of range");
  }
  if (quadrature_order != kGlOrder) {
    throw std::invalid_argument("sdc_oracle_factor: only order 8 supported");
  }
  auto jac = [&](const Vec& x) {
    return field_index == 0 ? sys.jac_f(x) : sys.jac_b_col(x, field_index - 1);
  };
  Mat a = Mat::Zero(sys.n, sys.n);
  for (int k = 0; k < kGlOrder; ++k) {
    const double s = 0.5 * (kGlNodes[k] + 1.0);
    a += 0.5 * kGlWeights[k] * jac(xbar + s * e);
  }
  return a;
}

std::vector<Vec> sample_box(const Box& box, int count, Rng& rng) {
  if (box.lower.size() != box.upper.size()) {
    throw std::invalid_argument("sample_box: bound size mismatch");
  }
  std::vector<Vec> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec x(box.dim());
    for (int d = 0; d < box.dim(); ++d) {
      x(d) = rng.uniform(box.lower(d), box.upper(d));
    }
    samples.push_back(std::move(x));
  }
  return samples;
}

Vec rk4_step(const Deriv& deriv, double t, const Vec& x, double dt) {
  const Vec k1 = deriv(t, x);
  const Vec k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Vec k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Vec k4 = deriv(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

SimResult simulate(const Deriv& deriv, const Vec& x0, double t_final,
                   double dt) {
  if (dt <= 0.0) throw std::invalid_argument("simulate: dt must be positive");
  const int steps = static_cast<int>(std::lround(t_final / dt));
  SimResult result;
  result.dt = dt;
  result.states.resize(x0.size(), steps + 1);
  result.states.col(0) = x0;
  Vec x = x0;
  for (int k = 0; k < steps; ++k) {
    x = rk4_step(deriv, k * dt, x, dt);
    if (!x.allFinite() || x.norm() > 1e9) {
      result.diverged = true;
      result.t_diverged = (k + 1) * dt;
      for (int r = k + 1; r <= steps; ++r) {
        result.states.col(r) = result.states.col(k);
      }
      return result;
    }
    result.states.col(k + 1) = x;
  }
  return result;
}

}  // namespace lcs::sys
