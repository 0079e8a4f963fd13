#include "lcs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lcs::linalg {

namespace {

bool all_finite(const Mat& m) { return m.allFinite(); }

// R⁻¹ Bᵀ via Cholesky; throws if R is not SPD.
Mat r_inv_bt(const Mat& r, const Mat& b) {
  Eigen::LLT<Mat> llt(0.5 * (r + r.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("solve_care: R is not positive definite");
  }
  return llt.solve(b.transpose());
}

Mat care_derivative(const Mat& a, const Mat& s, const Mat& q, const Mat& p) {
  // dP/dτ in reverse time: Aᵀ P + P A − P S P + Q with S = B R⁻¹ Bᵀ.
  return a.transpose() * p + p * a - p * s * p + q;
}

}  // namespace

double care_residual(const CareProblem& prob, const Mat& p) {
  const Mat rb = r_inv_bt(prob.r, prob.b);
  return (p * prob.a + prob.a.transpose() * p - p * prob.b * rb * p + prob.q)
      .norm();
}

bool is_spd(const Mat& m, double sym_tol) {
  if (m.rows() != m.cols() || !all_finite(m)) return false;
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > sym_tol * scale) return false;
  Eigen::LLT<Mat> llt(0.5 * (m + m.transpose()));
  return llt.info() == Eigen::Success;
}

Mat solve_lyapunov(const Mat& a, const Mat& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("solve_lyapunov: A not square");
  if (q.rows() != n || q.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: Q size mismatch");
  }
  if ((q - q.transpose()).norm() > 1e-8 * std::max(1.0, q.norm())) {
    throw std::invalid_argument("solve_lyapunov: Q not symmetric");
  }

  // vec(Aᵀ X + X A) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X), column-major vec.
  Mat k = Mat::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k.block(j * n, j * n, n, n) += a.transpose();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      // (Aᵀ ⊗ I): block (i,j) of size n×n equals A(j,i)·I.
      k.block(i * n, j * n, n, n).diagonal().array() += a(j, i);
    }
  }

  Vec rhs(n * n);
  for (Eigen::Index j = 0; j < n; ++j) rhs.segment(j * n, n) = -q.col(j);

  Eigen::FullPivLU<Mat> lu(k);
  if (!lu.isInvertible()) {
    throw std::runtime_error(
        "solve_lyapunov: no unique solution (A has eigenvalue pairs summing "
        "to zero)");
  }
  const Vec xv = lu.solve(rhs);
  Mat x(n, n);
  for (Eigen::Index j = 0; j < n; ++j) x.col(j) = xv.segment(j * n, n);
  if (!all_finite(x)) {
    throw std::runtime_error("solve_lyapunov: non-finite solution");
  }
  return 0.5 * (x + x.transpose());
}

bool is_hurwitz(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("is_hurwitz: A not square");
  if (!all_finite(a)) return false;
  try {
    const Mat x = solve_lyapunov(a, Mat::Identity(a.rows(), a.rows()));
    Eigen::LLT<Mat> llt(x);
    return llt.info() == Eigen::Success;
  } catch (const std::runtime_error&) {
    return false;
  }
}

CareSolution solve_care(const CareProblem& prob, double tol,
                        const std::optional<Mat>& warm_start) {
  const Eigen::Index n = prob.a.rows();
  if (prob.a.cols() != n || prob.b.rows() != n) {
    throw std::invalid_argument("solve_care: dimension mismatch");
  }
  if (!is_spd(prob.q)) throw std::invalid_argument("solve_care: Q not SPD");
  const Mat rb = r_inv_bt(prob.r, prob.b);  // also validates R
  const Mat s = prob.b * rb;                // B R⁻¹ Bᵀ

  constexpr int kMaxIntegratorSteps = 500;
  constexpr int kMaxNewtonSteps = 50;

  int iterations = 0;
  Mat p;
  bool have_stabilizing_seed = false;

  auto stabilizes = [&](const Mat& cand) {
    return all_finite(cand) && is_hurwitz(prob.a - s * cand);
  };

  if (warm_start && warm_start->rows() == n && stabilizes(*warm_start)) {
    p = 0.5 * (*warm_start + warm_start->transpose());
    have_stabilizing_seed = true;
  }

  if (!have_stabilizing_seed && stabilizes(prob.q)) {
    p = prob.q;
    have_stabilizing_seed = true;
  }

  if (!have_stabilizing_seed) {
    // Bass-style seed from one Lyapunov solve: with β beyond the spectral
    // radius, (A+βI)Z + Z(A+βI)ᵀ = 2S has Z ≻ 0 and K = R⁻¹BᵀZ⁻¹ stabilizes.
    // Handles the strong-actuator pairs where the DRE sweep below would need
    // steps far below its budget.
    const double beta = 1.0 + 2.0 * prob.a.norm();
    try {
      const Mat shifted = prob.a + beta * Mat::Identity(n, n);
      const Mat z = solve_lyapunov(shifted.transpose(), Mat(-2.0 * s));
      Eigen::FullPivLU<Mat> lu(z);
      if (lu.isInvertible()) {
        Mat seed = lu.inverse();
        seed = 0.5 * (seed + seed.transpose());
        if (stabilizes(seed)) {
          p = seed;
          have_stabilizing_seed = true;
        }
      }
      ++iterations;
    } catch (const std::runtime_error&) {
    }
  }

  if (!have_stabilizing_seed) {
    // Backward DRE sweep from P = Q until the derivative is small or the
    // implied gain stabilizes the pair.
    p = prob.q;
    Mat p_checkpoint = p;
    for (int step = 0; step < kMaxIntegratorSteps; ++step) {
      const double h = 0.1 / (1.0 + prob.a.norm() + (s * p).norm());
      const Mat k1 = care_derivative(prob.a, s, prob.q, p);
      if (k1.norm() < 1e-3) break;
      const Mat k2 = care_derivative(prob.a, s, prob.q, p + 0.5 * h * k1);
      const Mat k3 = care_derivative(prob.a, s, prob.q, p + 0.5 * h * k2);
      const Mat k4 = care_derivative(prob.a, s, prob.q, p + h * k3);
      p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      p = 0.5 * (p + p.transpose());
      ++iterations;
      if (!all_finite(p)) {
        p = p_checkpoint;
        continue;
      }
      if (step % 10 == 9) {
        p_checkpoint = p;
        if (stabilizes(p)) break;
      }
    }
    if (!all_finite(p)) p = prob.q;
  }

  // Newton–Kleinman refinement: each step is one Lyapunov solve.
  double residual = care_residual(prob, p);
  if (!stabilizes(p)) {
    throw CareFailure(
        "solve_care: unstabilizable or ill-conditioned pair (no stabilizing "
        "iterate found)",
        residual);
  }
  // Newton steps may overshoot in residual for several iterations before the
  // quadratic phase, but every iterate from a stabilizing seed remains
  // stabilizing, so run to tolerance or budget.
  for (int it = 0; it < kMaxNewtonSteps && residual > tol; ++it) {
    const Mat k = rb * p;  // R⁻¹ Bᵀ P
    const Mat acl = prob.a - prob.b * k;
    Mat next;
    try {
      next = solve_lyapunov(acl, prob.q + k.transpose() * prob.r * k);
    } catch (const std::runtime_error&) {
      throw CareFailure("solve_care: Newton step Lyapunov solve failed",
                        residual);
    }
    ++iterations;
    const double next_residual = care_residual(prob, next);
    if (!all_finite(next) || !std::isfinite(next_residual)) {
      throw CareFailure("solve_care: Newton iteration diverged", residual);
    }
    p = next;
    residual = next_residual;
  }

  if (residual > tol || !stabilizes(p) || !is_spd(p, 1e-6)) {
    throw CareFailure("solve_care: unstabilizable or ill-conditioned pair",
                      residual);
  }
  return CareSolution{0.5 * (p + p.transpose()), residual, iterations};
}

namespace {

// One full cyclic Jacobi pass over the strict upper triangle of s,
// accumulating rotations into v. Returns the off-diagonal Frobenius norm
// after the sweep.
double jacobi_sweep(Mat& s, Mat& v) {
  const Eigen::Index n = s.rows();
  for (Eigen::Index p = 0; p < n - 1; ++p) {
    for (Eigen::Index q = p + 1; q < n; ++q) {
      const double apq = s(p, q);
      if (std::abs(apq) < 1e-300) continue;
      const double tau = (s(q, q) - s(p, p)) / (2.0 * apq);
      const double t = (tau >= 0.0)
                           ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                           : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double sn = t * c;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double skp = s(k, p), skq = s(k, q);
        s(k, p) = c * skp - sn * skq;
        s(k, q) = sn * skp + c * skq;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double spk = s(p, k), sqk = s(q, k);
        s(p, k) = c * spk - sn * sqk;
        s(q, k) = sn * spk + c * sqk;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double vkp = v(k, p), vkq = v(k, q);
        v(k, p) = c * vkp - sn * vkq;
        v(k, q) = sn * vkp + c * vkq;
      }
    }
  }
  double off = 0.0;
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = 0; q < n; ++q) {
      if (p != q) off += s(p, q) * s(p, q);
    }
  }
  return std::sqrt(off);
}

void jacobi_eigen(const Mat& c, Mat& s, Mat& v) {
  if (c.rows() != c.cols()) throw std::invalid_argument("max_eig_sym: not square");
  if (!c.allFinite()) throw std::invalid_argument("max_eig_sym: non-finite input");
  s = 0.5 * (c + c.transpose());
  const Eigen::Index n = s.rows();
  v = Mat::Identity(n, n);
  const double scale = std::max(1e-300, s.norm());
  for (int sweep = 0; sweep < 30; ++sweep) {
    if (jacobi_sweep(s, v) <= 1e-14 * scale) break;
  }
}

}  // namespace

std::pair<double, Vec> max_eig_sym(const Mat& c) {
  Mat s, v;
  jacobi_eigen(c, s, v);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < s.rows(); ++i) {
    if (s(i, i) > s(best, best)) best = i;
  }
  Vec vec = v.col(best);
  vec.normalize();
  return {s(best, best), vec};
}

Vec sym_eigenvalues(const Mat& c) {
  Mat s, v;
  jacobi_eigen(c, s, v);
  Vec evals = s.diagonal();
  std::sort(evals.data(), evals.data() + evals.size());
  return evals;
}

}  // namespace lcs::linalg
