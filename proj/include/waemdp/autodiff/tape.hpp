#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape is an append-only list of nodes; node i only reads nodes j < i, so the
// tape order is a topological order and a single reverse sweep visits every
// node once. Backward rules are themselves expressed with tape operations, so
// gradients can be recorded on the tape (create_graph) and differentiated again.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waemdp/errors.hpp"

namespace waemdp::ad {

using Matrix = Eigen::MatrixXd;

enum class Op {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  MatMul,
  Transpose,
  AddRowVec,
  SumRows,
  BroadcastRows,
  RowSum,
  BroadcastCols,
  Sum,
  Broadcast,
  Scale,
  AddConst,
  MulConst,
  Sigmoid,
  Tanh,
  Relu,
  Softplus,
  Log,
  Exp,
  Abs,
  Square,
  Sqrt,
  Concat,
  SliceCols,
  PadCols,
  Clamp,
};

class Tape;

/// Handle to a node of a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] std::size_t index() const { return index_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }
  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
 public:
  struct Node {
    Matrix value;
    Op op = Op::Leaf;
    std::size_t a = 0;
    std::size_t b = 0;
    int arity = 0;
    bool requires_grad = false;
    double k = 0.0;         // scale / constant / leaky slope / clamp lo
    double k2 = 0.0;        // clamp hi
    Eigen::Index i0 = 0;    // slice start / broadcast rows
    Eigen::Index i1 = 0;    // slice length / broadcast cols
    Matrix aux;             // constant operand of MulConst
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const Node& node(std::size_t i) const { return nodes_[i]; }

  Var leaf(Matrix value, bool requires_grad = false) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
  }
  Var constant(Matrix value) { return leaf(std::move(value), false); }
  Var scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

  const Matrix& value(const Var& v) const {
    check(v);
    return nodes_[v.index()].value;
  }
  [[nodiscard]] bool requires_grad(const Var& v) const {
    check(v);
    return nodes_[v.index()].requires_grad;
  }

  /// Drops every node recorded after `mark` (a value previously returned by size()).
  void truncate(std::size_t mark) {
    if (mark < nodes_.size()) nodes_.resize(mark);
  }

  // ---- construction ---------------------------------------------------------

  Var unary(Op op, const Var& x, Matrix value, double k = 0.0, double k2 = 0.0) {
    check(x);
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.a = x.index();
    n.arity = 1;
    n.k = k;
    n.k2 = k2;
    n.requires_grad = nodes_[x.index()].requires_grad;
    return push(std::move(n));
  }

  Var binary(Op op, const Var& x, const Var& y, Matrix value) {
    check(x);
    check(y);
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.a = x.index();
    n.b = y.index();
    n.arity = 2;
    n.requires_grad = nodes_[x.index()].requires_grad || nodes_[y.index()].requires_grad;
    return push(std::move(n));
  }

  Node& last() { return nodes_.back(); }

  void check(const Var& v) const {
    if (v.tape() != this) throw CycleDetected("variable belongs to a different tape");
    if (v.index() >= nodes_.size()) throw CycleDetected("variable refers to a truncated node");
  }

  /// Gradients of a scalar node with respect to `wrt`.
  ///
  /// With create_graph the adjoints are recorded as tape nodes and returned as
  /// Vars that can be differentiated again; otherwise the adjoint nodes are
  /// discarded once their values are extracted.
  std::vector<Var> grad(const Var& loss, std::span<const Var> wrt);
  std::vector<Matrix> gradient_values(const Var& loss, std::span<const Var> wrt);

 private:
  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

// ---- operations ---------------------------------------------------------------

namespace detail {
inline void same_shape(const Var& x, const Var& y, const char* what) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ShapeMismatch(std::string(what) + ": " + std::to_string(x.rows()) + "x" +
                        std::to_string(x.cols()) + " vs " + std::to_string(y.rows()) + "x" +
                        std::to_string(y.cols()));
}
inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
}  // namespace detail

inline Var add(const Var& x, const Var& y) {
  detail::same_shape(x, y, "add");
  return x.tape()->binary(Op::Add, x, y, x.value() + y.value());
}
inline Var sub(const Var& x, const Var& y) {
  detail::same_shape(x, y, "sub");
  return x.tape()->binary(Op::Sub, x, y, x.value() - y.value());
}
inline Var mul(const Var& x, const Var& y) {
  detail::same_shape(x, y, "mul");
  return x.tape()->binary(Op::Mul, x, y, x.value().cwiseProduct(y.value()));
}
inline Var div(const Var& x, const Var& y) {
  detail::same_shape(x, y, "div");
  return x.tape()->binary(Op::Div, x, y, x.value().cwiseQuotient(y.value()));
}
inline Var matmul(const Var& x, const Var& y) {
  if (x.cols() != y.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
  return x.tape()->binary(Op::MatMul, x, y, x.value() * y.value());
}
inline Var transpose(const Var& x) {
  return x.tape()->unary(Op::Transpose, x, x.value().transpose());
}
/// Adds a 1 x c row vector to every row of an r x c matrix.
inline Var add_rowvec(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) throw ShapeMismatch("add_rowvec: bad row vector");
  Matrix v = x.value().rowwise() + row.value().row(0);
  return x.tape()->binary(Op::AddRowVec, x, row, std::move(v));
}
/// Column sums: r x c -> 1 x c.
inline Var sum_rows(const Var& x) { return x.tape()->unary(Op::SumRows, x, x.value().colwise().sum()); }
/// 1 x c -> r x c.
inline Var broadcast_rows(const Var& x, Eigen::Index rows) {
  if (x.rows() != 1) throw ShapeMismatch("broadcast_rows expects a row vector");
  Var out = x.tape()->unary(Op::BroadcastRows, x, x.value().replicate(rows, 1));
  x.tape()->last().i0 = rows;
  return out;
}
/// Row sums: r x c -> r x 1.
inline Var row_sum(const Var& x) { return x.tape()->unary(Op::RowSum, x, x.value().rowwise().sum()); }
/// r x 1 -> r x c.
inline Var broadcast_cols(const Var& x, Eigen::Index cols) {
  if (x.cols() != 1) throw ShapeMismatch("broadcast_cols expects a column vector");
  Var out = x.tape()->unary(Op::BroadcastCols, x, x.value().replicate(1, cols));
  x.tape()->last().i1 = cols;
  return out;
}
inline Var sum(const Var& x) { return x.tape()->unary(Op::Sum, x, Matrix::Constant(1, 1, x.value().sum())); }
inline Var broadcast(const Var& x, Eigen::Index rows, Eigen::Index cols) {
  if (x.rows() != 1 || x.cols() != 1) throw ShapeMismatch("broadcast expects a scalar");
  Var out = x.tape()->unary(Op::Broadcast, x, Matrix::Constant(rows, cols, x.scalar()));
  x.tape()->last().i0 = rows;
  x.tape()->last().i1 = cols;
  return out;
}
inline Var scale(const Var& x, double k) { return x.tape()->unary(Op::Scale, x, x.value() * k, k); }
inline Var add_const(const Var& x, double k) {
  return x.tape()->unary(Op::AddConst, x, (x.value().array() + k).matrix(), k);
}
/// Elementwise product with a constant (non-differentiated) matrix.
inline Var mul_const(const Var& x, const Matrix& c) {
  if (c.rows() != x.rows() || c.cols() != x.cols()) throw ShapeMismatch("mul_const: shape");
  Var out = x.tape()->unary(Op::MulConst, x, x.value().cwiseProduct(c));
  x.tape()->last().aux = c;
  return out;
}
inline Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }
inline Var sigmoid(const Var& x) {
  return x.tape()->unary(Op::Sigmoid, x, x.value().unaryExpr([](double v) { return detail::sigmoid(v); }));
}
inline Var tanh(const Var& x) { return x.tape()->unary(Op::Tanh, x, x.value().array().tanh().matrix()); }
/// Leaky rectifier; slope 0 gives the plain ReLU.
inline Var relu(const Var& x, double slope = 0.0) {
  return x.tape()->unary(Op::Relu, x,
                         x.value().unaryExpr([slope](double v) { return v > 0 ? v : slope * v; }), slope);
}
inline Var softplus(const Var& x) {
  return x.tape()->unary(Op::Softplus, x, x.value().unaryExpr([](double v) { return detail::softplus(v); }));
}
inline Var log(const Var& x) { return x.tape()->unary(Op::Log, x, x.value().array().log().matrix()); }
inline Var exp(const Var& x) { return x.tape()->unary(Op::Exp, x, x.value().array().exp().matrix()); }
inline Var abs(const Var& x) { return x.tape()->unary(Op::Abs, x, x.value().cwiseAbs()); }
inline Var square(const Var& x) { return x.tape()->unary(Op::Square, x, x.value().array().square().matrix()); }
inline Var sqrt(const Var& x) { return x.tape()->unary(Op::Sqrt, x, x.value().array().sqrt().matrix()); }
inline Var clamp(const Var& x, double lo, double hi) {
  return x.tape()->unary(Op::Clamp, x, x.value().cwiseMax(lo).cwiseMin(hi), lo, hi);
}
/// Column-wise concatenation [x | y].
inline Var concat(const Var& x, const Var& y) {
  if (x.rows() != y.rows()) throw ShapeMismatch("concat: row counts differ");
  Matrix v(x.rows(), x.cols() + y.cols());
  v << x.value(), y.value();
  return x.tape()->binary(Op::Concat, x, y, std::move(v));
}
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeMismatch("concat of nothing");
  Var out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out = concat(out, parts[i]);
  return out;
}
inline Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index len) {
  if (start < 0 || len < 0 || start + len > x.cols()) throw ShapeMismatch("slice_cols out of range");
  Var out = x.tape()->unary(Op::SliceCols, x, x.value().middleCols(start, len));
  x.tape()->last().i0 = start;
  x.tape()->last().i1 = len;
  return out;
}
/// Embeds x at column `start` of a zero matrix with `total` columns.
inline Var pad_cols(const Var& x, Eigen::Index start, Eigen::Index total) {
  if (start < 0 || start + x.cols() > total) throw ShapeMismatch("pad_cols out of range");
  Matrix v = Matrix::Zero(x.rows(), total);
  v.middleCols(start, x.cols()) = x.value();
  Var out = x.tape()->unary(Op::PadCols, x, std::move(v));
  x.tape()->last().i0 = start;
  x.tape()->last().i1 = total;
  return out;
}

inline Var operator+(const Var& x, const Var& y) { return add(x, y); }
inline Var operator-(const Var& x, const Var& y) { return sub(x, y); }
inline Var operator*(const Var& x, const Var& y) { return mul(x, y); }
inline Var operator/(const Var& x, const Var& y) { return div(x, y); }
inline Var operator*(double k, const Var& x) { return scale(x, k); }
inline Var operator*(const Var& x, double k) { return scale(x, k); }
inline Var operator-(const Var& x) { return scale(x, -1.0); }

/// Row-wise Euclidean norm, r x c -> r x 1; `eps` keeps the derivative finite at 0.
inline Var row_norm(const Var& x, double eps = 1e-24) { return sqrt(add_const(row_sum(square(x)), eps)); }

/// Numerically stable log(sigmoid(x)).
inline Var log_sigmoid(const Var& x) { return -softplus(-x); }

// ---- backward -------------------------------------------------------------------

namespace detail {

inline Matrix relu_mask(const Matrix& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0 ? 1.0 : slope; });
}

inline void accumulate(std::vector<std::optional<Var>>& adj, std::size_t i, const Var& g) {
  if (adj[i]) {
    adj[i] = add(*adj[i], g);
  } else {
    adj[i] = g;
  }
}

}  // namespace detail

inline std::vector<Var> Tape::grad(const Var& loss, std::span<const Var> wrt) {
  check(loss);
  for (const Var& w : wrt) check(w);
  if (value(loss).rows() != 1 || value(loss).cols() != 1)
    throw NonScalarLoss("loss has shape " + std::to_string(value(loss).rows()) + "x" +
                        std::to_string(value(loss).cols()));

  const std::size_t top = loss.index();
  std::vector<std::optional<Var>> adj(top + 1);
  adj[top] = scalar(1.0);

  std::vector<bool> wanted(top + 1, false);
  for (const Var& w : wrt)
    if (w.index() <= top) wanted[w.index()] = true;

  for (std::size_t i = top + 1; i-- > 0;) {
    if (!adj[i]) continue;
    // Node i is copied by value since recording adjoints may reallocate nodes_.
    const Op op = nodes_[i].op;
    if (op == Op::Leaf || !nodes_[i].requires_grad) continue;
    const std::size_t ia = nodes_[i].a;
    const std::size_t ib = nodes_[i].b;
    const bool ga_needed = nodes_[ia].requires_grad;
    const bool gb_needed = nodes_[i].arity == 2 && nodes_[ib].requires_grad;
    const Var g = *adj[i];
    const Var x(this, ia);
    const Var y(this, ib);
    const Var out(this, i);

    switch (op) {
      case Op::Leaf:
        break;
      case Op::Add:
        if (ga_needed) detail::accumulate(adj, ia, g);
        if (gb_needed) detail::accumulate(adj, ib, g);
        break;
      case Op::Sub:
        if (ga_needed) detail::accumulate(adj, ia, g);
        if (gb_needed) detail::accumulate(adj, ib, scale(g, -1.0));
        break;
      case Op::Mul:
        if (ga_needed) detail::accumulate(adj, ia, mul(g, y));
        if (gb_needed) detail::accumulate(adj, ib, mul(g, x));
        break;
      case Op::Div:
        if (ga_needed) detail::accumulate(adj, ia, div(g, y));
        if (gb_needed) detail::accumulate(adj, ib, scale(div(mul(g, out), y), -1.0));
        break;
      case Op::MatMul:
        if (ga_needed) detail::accumulate(adj, ia, matmul(g, transpose(y)));
        if (gb_needed) detail::accumulate(adj, ib, matmul(transpose(x), g));
        break;
      case Op::Transpose:
        detail::accumulate(adj, ia, transpose(g));
        break;
      case Op::AddRowVec:
        if (ga_needed) detail::accumulate(adj, ia, g);
        if (gb_needed) detail::accumulate(adj, ib, sum_rows(g));
        break;
      case Op::SumRows:
        detail::accumulate(adj, ia, broadcast_rows(g, nodes_[ia].value.rows()));
        break;
      case Op::BroadcastRows:
        detail::accumulate(adj, ia, sum_rows(g));
        break;
      case Op::RowSum:
        detail::accumulate(adj, ia, broadcast_cols(g, nodes_[ia].value.cols()));
        break;
      case Op::BroadcastCols:
        detail::accumulate(adj, ia, row_sum(g));
        break;
      case Op::Sum:
        detail::accumulate(adj, ia, broadcast(g, nodes_[ia].value.rows(), nodes_[ia].value.cols()));
        break;
      case Op::Broadcast:
        detail::accumulate(adj, ia, sum(g));
        break;
      case Op::Scale: {
        const double k = nodes_[i].k;
        detail::accumulate(adj, ia, scale(g, k));
        break;
      }
      case Op::AddConst:
        detail::accumulate(adj, ia, g);
        break;
      case Op::MulConst: {
        const Matrix c = nodes_[i].aux;
        detail::accumulate(adj, ia, mul_const(g, c));
        break;
      }
      case Op::Sigmoid:
        // s (1 - s)
        detail::accumulate(adj, ia, mul(g, mul(out, add_const(scale(out, -1.0), 1.0))));
        break;
      case Op::Tanh:
        detail::accumulate(adj, ia, mul(g, add_const(scale(square(out), -1.0), 1.0)));
        break;
      case Op::Relu: {
        const Matrix mask = detail::relu_mask(nodes_[ia].value, nodes_[i].k);
        detail::accumulate(adj, ia, mul_const(g, mask));
        break;
      }
      case Op::Softplus:
        detail::accumulate(adj, ia, mul(g, sigmoid(x)));
        break;
      case Op::Log:
        detail::accumulate(adj, ia, div(g, x));
        break;
      case Op::Exp:
        detail::accumulate(adj, ia, mul(g, out));
        break;
      case Op::Abs: {
        const Matrix sign = nodes_[ia].value.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
        detail::accumulate(adj, ia, mul_const(g, sign));
        break;
      }
      case Op::Square:
        detail::accumulate(adj, ia, scale(mul(g, x), 2.0));
        break;
      case Op::Sqrt:
        detail::accumulate(adj, ia, scale(div(g, out), 0.5));
        break;
      case Op::Concat: {
        const Eigen::Index ca = nodes_[ia].value.cols();
        const Eigen::Index cb = nodes_[ib].value.cols();
        if (ga_needed) detail::accumulate(adj, ia, slice_cols(g, 0, ca));
        if (gb_needed) detail::accumulate(adj, ib, slice_cols(g, ca, cb));
        break;
      }
      case Op::SliceCols: {
        const Eigen::Index start = nodes_[i].i0;
        const Eigen::Index total = nodes_[ia].value.cols();
        detail::accumulate(adj, ia, pad_cols(g, start, total));
        break;
      }
      case Op::PadCols: {
        const Eigen::Index start = nodes_[i].i0;
        const Eigen::Index len = nodes_[ia].value.cols();
        detail::accumulate(adj, ia, slice_cols(g, start, len));
        break;
      }
      case Op::Clamp: {
        const double lo = nodes_[i].k;
        const double hi = nodes_[i].k2;
        const Matrix mask = nodes_[ia].value.unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
        detail::accumulate(adj, ia, mul_const(g, mask));
        break;
      }
    }
    if (!wanted[i]) adj[i].reset();
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.index() <= top && adj[w.index()]) {
      out.push_back(*adj[w.index()]);
    } else {
      out.push_back(constant(Matrix::Zero(value(w).rows(), value(w).cols())));
    }
  }
  return out;
}

inline std::vector<Matrix> Tape::gradient_values(const Var& loss, std::span<const Var> wrt) {
  const std::size_t mark = size();
  std::vector<Var> g = grad(loss, wrt);
  std::vector<Matrix> out;
  out.reserve(g.size());
  for (const Var& v : g) out.push_back(value(v));
  truncate(mark);
  return out;
}

}  // namespace waemdp::ad
