#ifndef LCS_TAPE_HPP_
#define LCS_TAPE_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace lcs::ad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Handle to a node on a Tape. Valid only for the tape that created it and
/// only until the next clear().
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense matrix values. Operations append nodes in
/// topological order; backward() runs a single reverse sweep from a scalar
/// output. Vectors are one-column matrices, scalars are 1×1.
class Tape {
 public:
  Var leaf(Mat value);
  Var constant(Mat value) { return leaf(std::move(value)); }
  Var scalar(double value) { return leaf(Mat::Constant(1, 1, value)); }

  // Elementwise and affine ops.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);        // c·a
  Var shift(Var a, double c);        // a + c (elementwise)
  Var cmul(Var a, Var b);            // elementwise product
  Var tanh(Var a);
  Var sin(Var a);
  Var cos(Var a);

  // Matrix ops.
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var row_scale(Var d, Var m);       // diag(d)·m, d is h×1
  Var add_col(Var m, Var b);         // m(:,j) + b for all j, b is h×1
  Var smul(Var s, Var m);            // taped scalar s (1×1) times m

  // Shape ops. reshape/vec use row-major element order.
  Var reshape(Var a, int rows, int cols);
  Var block(Var a, int i0, int j0, int rows, int cols);
  Var gather_rows(Var a, std::vector<int> rows);
  Var vcat(Var a, Var b);

  // Reductions and scalar nonlinearities.
  Var sum(Var a);
  Var sum_sq(Var a);
  Var hinge(Var a);                  // max(0, a), a is 1×1
  Var max_eig_sym(Var a);            // λ_max of (a + aᵀ)/2, a square

  // Per-column contraction: Y is (n·k)×P of row-major n×k blocks, E is k×P;
  // returns n×P with out(i,p) = Σ_j Y(i·k+j, p) E(j, p).
  Var colwise_matvec(Var y, Var e, int n, int k);

  const Mat& value(Var v) const;
  /// Adjoint of v after backward(); zero matrix if v was not reached.
  const Mat& adjoint(Var v) const;

  /// Reverse sweep from a 1×1 output. Resets all adjoints first.
  void backward(Var output);

  void clear();
  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kAdd, kSub, kNeg, kScale, kShift, kCMul, kTanh, kSin, kCos,
    kMatMul, kTranspose, kRowScale, kAddCol, kSMul,
    kReshape, kBlock, kGatherRows, kVCat,
    kSum, kSumSq, kHinge, kMaxEigSym, kColwiseMatVec,
  };

  struct Node {
    Op op = Op::kLeaf;
    int a = -1;
    int b = -1;
    double c = 0.0;
    int i0 = 0, j0 = 0, d0 = 0, d1 = 0;
    std::vector<int> idx;
    Mat value;
    Mat adj;
    Vec aux;  // eigenvector payload for kMaxEigSym
    bool reached = false;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check_same_shape(const Mat& x, const Mat& y, const char* what) const;

  std::vector<Node> nodes_;
  mutable Mat zero_;
};

}  // namespace lcs::ad

#endif  // LCS_TAPE_HPP_
