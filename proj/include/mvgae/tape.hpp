#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvgae/matrix.hpp"

namespace mvgae {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t index = 0;
};

/// Reverse-mode differentiation tape over dense matrices.
///
/// Every operation evaluates eagerly and records a node whose inputs are
/// earlier nodes, so recording order is a topological order. Leaves are either
/// constants or trainable parameters; `backward` returns one gradient per
/// parameter in the order the parameters were registered.
///
/// A Tape is single-owner and not thread-safe.
class Tape {
 public:
  Var constant(Matrix value);
  Var parameter(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t parameter_count() const { return params_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var subtract(Var a, Var b);
  Var multiply(Var a, Var b);
  /// x (R x C) plus a 1 x C row added to every row.
  Var add_row(Var x, Var row);
  /// scale * x + shift, entrywise.
  Var affine(Var x, double scale, double shift);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var square(Var x);
  /// ln(max(x, floor)); gradient is zero where the floor is active.
  Var log_clamped(Var x, double floor = 1e-12);
  Var row_softmax(Var x);
  Var col_softmax(Var x);
  Var transpose(Var x);
  /// Sum of all entries as a 1x1 node.
  Var sum(Var x);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var take_rows(Var x, std::vector<std::size_t> rows);
  /// Scatter the rows of x into a zero matrix with `total_rows` rows.
  Var place_rows(Var x, std::vector<std::size_t> rows, std::size_t total_rows);
  /// diag(v) * m for a 1 x N row v and an N x K matrix m.
  Var scale_rows(Var v, Var m);

  /// Gradients of a 1x1 loss with respect to every parameter. Parameters the
  /// loss does not depend on receive zero gradients.
  std::vector<Matrix> backward(Var loss);

 private:
  enum class Op {
    leaf,
    matmul,
    add,
    subtract,
    multiply,
    add_row,
    affine,
    relu,
    sigmoid,
    square,
    log_clamped,
    row_softmax,
    col_softmax,
    transpose,
    sum,
    concat_cols,
    concat_rows,
    take_rows,
    place_rows,
    scale_rows,
  };

  struct Node {
    Op op = Op::leaf;
    Matrix value;
    std::vector<std::size_t> inputs;
    std::vector<std::size_t> indices;
    double a = 0.0;
    double b = 0.0;
    bool needs_grad = false;
  };

  Var record(Op op, Matrix value, std::vector<std::size_t> inputs);
  void propagate(const Node& node, const Matrix& grad, std::vector<Matrix>& adjoints) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> params_;
};

}  // namespace mvgae
