#include "lcs/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "lcs/linalg.hpp"

namespace lcs::ad {

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("tape: invalid var handle");
  }
  return nodes_[v.id];
}

void Tape::check_same_shape(const Mat& x, const Mat& y, const char* what) const {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument(std::string("tape: shape mismatch in ") + what);
  }
}

const Mat& Tape::value(Var v) const { return node(v).value; }

const Mat& Tape::adjoint(Var v) const {
  const Node& n = node(v);
  if (n.reached) return n.adj;
  zero_ = Mat::Zero(n.value.rows(), n.value.cols());
  return zero_;
}

Var Tape::leaf(Mat value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a) - value(b);
  return push(std::move(n));
}

Var Tape::neg(Var a) {
  Node n;
  n.op = Op::kNeg;
  n.a = a.id;
  n.value = -value(a);
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.c = c;
  n.value = c * value(a);
  return push(std::move(n));
}

Var Tape::shift(Var a, double c) {
  Node n;
  n.op = Op::kShift;
  n.a = a.id;
  n.c = c;
  n.value = value(a).array() + c;
  return push(std::move(n));
}

Var Tape::cmul(Var a, Var b) {
  check_same_shape(value(a), value(b), "cmul");
  Node n;
  n.op = Op::kCMul;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a.id;
  n.value = value(a).array().tanh();
  return push(std::move(n));
}

Var Tape::sin(Var a) {
  Node n;
  n.op = Op::kSin;
  n.a = a.id;
  n.value = value(a).array().sin();
  return push(std::move(n));
}

Var Tape::cos(Var a) {
  Node n;
  n.op = Op::kCos;
  n.a = a.id;
  n.value = value(a).array().cos();
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) {
    throw std::invalid_argument("tape: shape mismatch in matmul");
  }
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a) * value(b);
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  Node n;
  n.op = Op::kTranspose;
  n.a = a.id;
  n.value = value(a).transpose();
  return push(std::move(n));
}

Var Tape::row_scale(Var d, Var m) {
  if (value(d).cols() != 1 || value(d).rows() != value(m).rows()) {
    throw std::invalid_argument("tape: shape mismatch in row_scale");
  }
  Node n;
  n.op = Op::kRowScale;
  n.a = d.id;
  n.b = m.id;
  n.value = value(d).col(0).asDiagonal() * value(m);
  return push(std::move(n));
}

Var Tape::add_col(Var m, Var b) {
  if (value(b).cols() != 1 || value(b).rows() != value(m).rows()) {
    throw std::invalid_argument("tape: shape mismatch in add_col");
  }
  Node n;
  n.op = Op::kAddCol;
  n.a = m.id;
  n.b = b.id;
  n.value = value(m).colwise() + value(b).col(0);
  return push(std::move(n));
}

Var Tape::smul(Var s, Var m) {
  if (value(s).size() != 1) {
    throw std::invalid_argument("tape: smul scalar must be 1x1");
  }
  Node n;
  n.op = Op::kSMul;
  n.a = s.id;
  n.b = m.id;
  n.value = value(s)(0, 0) * value(m);
  return push(std::move(n));
}

Var Tape::reshape(Var a, int rows, int cols) {
  const Mat& x = value(a);
  if (x.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw std::invalid_argument("tape: reshape element count mismatch");
  }
  Node n;
  n.op = Op::kReshape;
  n.a = a.id;
  n.value.resize(rows, cols);
  const int in_cols = static_cast<int>(x.cols());
  for (int k = 0; k < static_cast<int>(x.size()); ++k) {
    // Row-major enumeration of both shapes.
    n.value(k / cols, k % cols) = x(k / in_cols, k % in_cols);
  }
  return push(std::move(n));
}

Var Tape::block(Var a, int i0, int j0, int rows, int cols) {
  const Mat& x = value(a);
  if (i0 < 0 || j0 < 0 || i0 + rows > x.rows() || j0 + cols > x.cols()) {
    throw std::invalid_argument("tape: block out of range");
  }
  Node n;
  n.op = Op::kBlock;
  n.a = a.id;
  n.i0 = i0;
  n.j0 = j0;
  n.value = x.block(i0, j0, rows, cols);
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<int> rows) {
  const Mat& x = value(a);
  Node n;
  n.op = Op::kGatherRows;
  n.a = a.id;
  n.value.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) {
      throw std::invalid_argument("tape: gather_rows index out of range");
    }
    n.value.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  n.idx = std::move(rows);
  return push(std::move(n));
}

Var Tape::vcat(Var a, Var b) {
  if (value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("tape: shape mismatch in vcat");
  }
  Node n;
  n.op = Op::kVCat;
  n.a = a.id;
  n.b = b.id;
  n.value.resize(value(a).rows() + value(b).rows(), value(a).cols());
  n.value.topRows(value(a).rows()) = value(a);
  n.value.bottomRows(value(b).rows()) = value(b);
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.value = Mat::Constant(1, 1, value(a).sum());
  return push(std::move(n));
}

Var Tape::sum_sq(Var a) {
  Node n;
  n.op = Op::kSumSq;
  n.a = a.id;
  n.value = Mat::Constant(1, 1, value(a).squaredNorm());
  return push(std::move(n));
}

Var Tape::hinge(Var a) {
  if (value(a).size() != 1) {
    throw std::invalid_argument("tape: hinge input must be 1x1");
  }
  Node n;
  n.op = Op::kHinge;
  n.a = a.id;
  n.value = Mat::Constant(1, 1, std::max(0.0, value(a)(0, 0)));
  return push(std::move(n));
}

Var Tape::max_eig_sym(Var a) {
  const Mat& x = value(a);
  if (x.rows() != x.cols()) {
    throw std::invalid_argument("tape: max_eig_sym input must be square");
  }
  auto [lam, v] = linalg::max_eig_sym(x);
  Node n;
  n.op = Op::kMaxEigSym;
  n.a = a.id;
  n.value = Mat::Constant(1, 1, lam);
  n.aux = v;
  return push(std::move(n));
}

Var Tape::colwise_matvec(Var y, Var e, int nrows, int k) {
  const Mat& ym = value(y);
  const Mat& em = value(e);
  if (ym.rows() != static_cast<Eigen::Index>(nrows) * k || em.rows() != k ||
      ym.cols() != em.cols()) {
    throw std::invalid_argument("tape: shape mismatch in colwise_matvec");
  }
  Node n;
  n.op = Op::kColwiseMatVec;
  n.a = y.id;
  n.b = e.id;
  n.d0 = nrows;
  n.d1 = k;
  n.value = Mat::Zero(nrows, ym.cols());
  for (Eigen::Index p = 0; p < ym.cols(); ++p) {
    for (int i = 0; i < nrows; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += ym(i * k + j, p) * em(j, p);
      n.value(i, p) = acc;
    }
  }
  return push(std::move(n));
}

void Tape::backward(Var output) {
  Node& out = nodes_.at(output.id);
  if (out.value.size() != 1) {
    throw std::invalid_argument("tape: backward requires a scalar output");
  }
  for (Node& n : nodes_) n.reached = false;
  out.adj = Mat::Constant(1, 1, 1.0);
  out.reached = true;

  auto touch = [&](int id) -> Mat& {
    Node& n = nodes_[id];
    if (!n.reached) {
      n.adj = Mat::Zero(n.value.rows(), n.value.cols());
      n.reached = true;
    }
    return n.adj;
  };

  for (int u = output.id; u >= 0; --u) {
    Node& nu = nodes_[u];
    if (!nu.reached || nu.op == Op::kLeaf) continue;
    const Mat& g = nu.adj;
    switch (nu.op) {
      case Op::kAdd:
        touch(nu.a) += g;
        touch(nu.b) += g;
        break;
      case Op::kSub:
        touch(nu.a) += g;
        touch(nu.b) -= g;
        break;
      case Op::kNeg:
        touch(nu.a) -= g;
        break;
      case Op::kScale:
        touch(nu.a) += nu.c * g;
        break;
      case Op::kShift:
        touch(nu.a) += g;
        break;
      case Op::kCMul:
        touch(nu.a) += g.cwiseProduct(nodes_[nu.b].value);
        touch(nu.b) += g.cwiseProduct(nodes_[nu.a].value);
        break;
      case Op::kTanh:
        touch(nu.a) +=
            g.cwiseProduct((1.0 - nu.value.array().square()).matrix());
        break;
      case Op::kSin:
        touch(nu.a) +=
            g.cwiseProduct(nodes_[nu.a].value.array().cos().matrix());
        break;
      case Op::kCos:
        touch(nu.a) -=
            g.cwiseProduct(nodes_[nu.a].value.array().sin().matrix());
        break;
      case Op::kMatMul:
        touch(nu.a).noalias() += g * nodes_[nu.b].value.transpose();
        touch(nu.b).noalias() += nodes_[nu.a].value.transpose() * g;
        break;
      case Op::kTranspose:
        touch(nu.a) += g.transpose();
        break;
      case Op::kRowScale: {
        const Mat& d = nodes_[nu.a].value;
        const Mat& m = nodes_[nu.b].value;
        touch(nu.a) += g.cwiseProduct(m).rowwise().sum();
        touch(nu.b) += d.col(0).asDiagonal() * g;
        break;
      }
      case Op::kAddCol:
        touch(nu.a) += g;
        touch(nu.b) += g.rowwise().sum();
        break;
      case Op::kSMul: {
        const double s = nodes_[nu.a].value(0, 0);
        touch(nu.a)(0, 0) += g.cwiseProduct(nodes_[nu.b].value).sum();
        touch(nu.b) += s * g;
        break;
      }
      case Op::kReshape: {
        Mat& ga = touch(nu.a);
        const int in_cols = static_cast<int>(ga.cols());
        const int out_cols = static_cast<int>(g.cols());
        for (int k = 0; k < static_cast<int>(g.size()); ++k) {
          ga(k / in_cols, k % in_cols) += g(k / out_cols, k % out_cols);
        }
        break;
      }
      case Op::kBlock:
        touch(nu.a).block(nu.i0, nu.j0, g.rows(), g.cols()) += g;
        break;
      case Op::kGatherRows: {
        Mat& ga = touch(nu.a);
        for (std::size_t i = 0; i < nu.idx.size(); ++i) {
          ga.row(nu.idx[i]) += g.row(static_cast<Eigen::Index>(i));
        }
        break;
      }
      case Op::kVCat: {
        const Eigen::Index ra = nodes_[nu.a].value.rows();
        touch(nu.a) += g.topRows(ra);
        touch(nu.b) += g.bottomRows(g.rows() - ra);
        break;
      }
      case Op::kSum:
        touch(nu.a).array() += g(0, 0);
        break;
      case Op::kSumSq:
        touch(nu.a) += 2.0 * g(0, 0) * nodes_[nu.a].value;
        break;
      case Op::kHinge:
        if (nodes_[nu.a].value(0, 0) > 0.0) touch(nu.a) += g;
        break;
      case Op::kMaxEigSym:
        // dλ_max = vᵀ (dC) v for a simple top eigenvalue; valid subgradient
        // at degeneracy.
        touch(nu.a).noalias() += g(0, 0) * (nu.aux * nu.aux.transpose());
        break;
      case Op::kColwiseMatVec: {
        Mat& gy = touch(nu.a);
        Mat& ge = touch(nu.b);
        const Mat& ym = nodes_[nu.a].value;
        const Mat& em = nodes_[nu.b].value;
        for (Eigen::Index p = 0; p < g.cols(); ++p) {
          for (int i = 0; i < nu.d0; ++i) {
            const double gi = g(i, p);
            if (gi == 0.0) continue;
            for (int j = 0; j < nu.d1; ++j) {
              gy(i * nu.d1 + j, p) += gi * em(j, p);
              ge(j, p) += gi * ym(i * nu.d1 + j, p);
            }
          }
        }
        break;
      }
      case Op::kLeaf:
        break;
    }
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace lcs::ad
