#ifndef LCS_LINALG_HPP_
#define LCS_LINALG_HPP_

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <utility>

namespace lcs::linalg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Continuous algebraic Riccati problem: find P solving
///   P A + Aᵀ P − P B R⁻¹ Bᵀ P + Q = 0
/// with Q, R symmetric positive definite.
struct CareProblem {
  Mat a;  // n×n
  Mat b;  // n×m
  Mat q;  // n×n
  Mat r;  // m×m
};

struct CareSolution {
  Mat p;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// CARE failure that carries the last residual reached before giving up.
class CareFailure : public std::runtime_error {
 public:
  CareFailure(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual(last_residual) {}
  double last_residual;
};

/// Frobenius norm of P A + Aᵀ P − P B R⁻¹ Bᵀ P + Q.
double care_residual(const CareProblem& prob, const Mat& p);

/// True iff m is symmetric (within tol) and positive definite (LLT succeeds).
bool is_spd(const Mat& m, double sym_tol = 1e-8);

/// Solves Aᵀ X + X A = −Q for symmetric X via the n²×n² Kronecker system.
/// Throws std::runtime_error when the system has no unique solution.
Mat solve_lyapunov(const Mat& a, const Mat& q);

/// Lyapunov stability test: true iff Aᵀ X + X A = −I has a unique positive
/// definite solution.
bool is_hurwitz(const Mat& a);

/// Stabilizing CARE solution via backward integration of the differential
/// Riccati equation from P = Q, refined by Newton–Kleinman iterations.
/// `warm_start` seeds the Newton stage when it already stabilizes (A, B).
CareSolution solve_care(const CareProblem& prob, double tol = 1e-9,
                        const std::optional<Mat>& warm_start = std::nullopt);

/// Largest eigenvalue and a unit eigenvector of (C + Cᵀ)/2, computed by
/// cyclic Jacobi rotations.
std::pair<double, Vec> max_eig_sym(const Mat& c);

/// Full spectrum of (C + Cᵀ)/2 by the same Jacobi sweep, ascending order.
Vec sym_eigenvalues(const Mat& c);

}  // namespace lcs::linalg

#endif  // LCS_LINALG_HPP_
