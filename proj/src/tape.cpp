#include "mvgae/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvgae {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return ConstMap(m.data().data(), m.rows(), m.cols()); }

// g * b^T
Matrix matmul_nt(const Matrix& g, const Matrix& b) {
  Matrix out(g.rows(), b.rows());
  MutMap(out.data().data(), out.rows(), out.cols()).noalias() = view(g) * view(b).transpose();
  return out;
}

// a^T * g
Matrix matmul_tn(const Matrix& a, const Matrix& g) {
  Matrix out(a.cols(), g.cols());
  MutMap(out.data().data(), out.rows(), out.cols()).noalias() = view(a).transpose() * view(g);
  return out;
}

void accumulate(std::vector<Matrix>& adjoints, std::size_t index, Matrix grad) {
  if (adjoints[index].empty()) {
    adjoints[index] = std::move(grad);
  } else {
    adjoints[index] += grad;
  }
}

Matrix softmax_backward_rows(const Matrix& y, const Matrix& g) {
  Matrix dx(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
    for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) = y(r, c) * (g(r, c) - dot);
  }
  return dx;
}

}  // namespace

Var Tape::record(Op op, Matrix value, std::vector<std::size_t> inputs) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](std::size_t i) { return nodes_[i].needs_grad; });
  node.inputs = std::move(inputs);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
  if (value.empty()) throw std::invalid_argument("tape: empty constant");
  return record(Op::leaf, std::move(value), {});
}

Var Tape::parameter(Matrix value) {
  if (value.empty()) throw std::invalid_argument("tape: empty parameter");
  Var v = record(Op::leaf, std::move(value), {});
  nodes_[v.index].needs_grad = true;
  params_.push_back(v.index);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  return record(Op::matmul, mvgae::matmul(value(a), value(b)), {a.index, b.index});
}

Var Tape::add(Var a, Var b) { return record(Op::add, value(a) + value(b), {a.index, b.index}); }

Var Tape::subtract(Var a, Var b) {
  return record(Op::subtract, value(a) - value(b), {a.index, b.index});
}

Var Tape::multiply(Var a, Var b) {
  return record(Op::multiply, hadamard(value(a), value(b)), {a.index, b.index});
}

Var Tape::add_row(Var x, Var row) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw std::invalid_argument("add_row: shape mismatch (" + xv.shape_string() + " + " +
                                rv.shape_string() + ")");
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
  return record(Op::add_row, std::move(out), {x.index, row.index});
}

Var Tape::affine(Var x, double scale, double shift) {
  Matrix out = value(x);
  for (double& v : out.data()) v = scale * v + shift;
  Var result = record(Op::affine, std::move(out), {x.index});
  nodes_[result.index].a = scale;
  return result;
}

Var Tape::relu(Var x) { return record(Op::relu, mvgae::relu(value(x)), {x.index}); }

Var Tape::sigmoid(Var x) { return record(Op::sigmoid, mvgae::sigmoid(value(x)), {x.index}); }

Var Tape::square(Var x) { return record(Op::square, mvgae::square(value(x)), {x.index}); }

Var Tape::log_clamped(Var x, double floor) {
  Matrix out = value(x);
  for (double& v : out.data()) v = std::log(std::max(v, floor));
  Var result = record(Op::log_clamped, std::move(out), {x.index});
  nodes_[result.index].a = floor;
  return result;
}

Var Tape::row_softmax(Var x) {
  return record(Op::row_softmax, mvgae::row_softmax(value(x)), {x.index});
}

Var Tape::col_softmax(Var x) {
  return record(Op::col_softmax, mvgae::col_softmax(value(x)), {x.index});
}

Var Tape::transpose(Var x) { return record(Op::transpose, value(x).transpose(), {x.index}); }

Var Tape::sum(Var x) { return record(Op::sum, Matrix(1, 1, value(x).sum()), {x.index}); }

Var Tape::concat_cols(std::span<const Var> parts) {
  std::vector<Matrix> values;
  std::vector<std::size_t> inputs;
  for (Var p : parts) {
    values.push_back(value(p));
    inputs.push_back(p.index);
  }
  return record(Op::concat_cols, mvgae::concat_cols(values), std::move(inputs));
}

Var Tape::concat_rows(std::span<const Var> parts) {
  std::vector<Matrix> values;
  std::vector<std::size_t> inputs;
  for (Var p : parts) {
    values.push_back(value(p));
    inputs.push_back(p.index);
  }
  return record(Op::concat_rows, mvgae::concat_rows(values), std::move(inputs));
}

Var Tape::take_rows(Var x, std::vector<std::size_t> rows) {
  Var result = record(Op::take_rows, mvgae::take_rows(value(x), rows), {x.index});
  nodes_[result.index].indices = std::move(rows);
  return result;
}

Var Tape::place_rows(Var x, std::vector<std::size_t> rows, std::size_t total_rows) {
  const Matrix& xv = value(x);
  if (rows.size() != xv.rows()) {
    throw std::invalid_argument("place_rows: " + std::to_string(rows.size()) +
                                " indices for " + xv.shape_string());
  }
  Matrix out(total_rows, xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= total_rows) throw std::out_of_range("place_rows: row index out of range");
    std::copy(xv.row(i).begin(), xv.row(i).end(), out.row(rows[i]).begin());
  }
  Var result = record(Op::place_rows, std::move(out), {x.index});
  nodes_[result.index].indices = std::move(rows);
  return result;
}

Var Tape::scale_rows(Var v, Var m) {
  const Matrix& vv = value(v);
  const Matrix& mv = value(m);
  if (vv.rows() != 1 || vv.cols() != mv.rows()) {
    throw std::invalid_argument("scale_rows: shape mismatch (" + vv.shape_string() + " vs " +
                                mv.shape_string() + ")");
  }
  Matrix out = mv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& x : out.row(r)) x *= vv(0, r);
  return record(Op::scale_rows, std::move(out), {v.index, m.index});
}

std::vector<Matrix> Tape::backward(Var loss) {
  if (!value(loss).is_scalar()) {
    throw std::invalid_argument("backward: loss must be 1x1, got " + value(loss).shape_string());
  }
  std::vector<Matrix> adjoints(loss.index + 1);
  adjoints[loss.index] = Matrix(1, 1, 1.0);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (node.op == Op::leaf || !node.needs_grad || adjoints[i].empty()) continue;
    propagate(node, adjoints[i], adjoints);
  }
  std::vector<Matrix> grads;
  grads.reserve(params_.size());
  for (std::size_t p : params_) {
    if (p < adjoints.size() && !adjoints[p].empty()) {
      grads.push_back(std::move(adjoints[p]));
    } else {
      grads.push_back(Matrix(nodes_[p].value.rows(), nodes_[p].value.cols()));
    }
  }
  return grads;
}

void Tape::propagate(const Node& node, const Matrix& g, std::vector<Matrix>& adjoints) const {
  auto wants = [&](std::size_t k) { return nodes_[node.inputs[k]].needs_grad; };
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[node.inputs[k]].value; };
  auto push = [&](std::size_t k, Matrix grad) { accumulate(adjoints, node.inputs[k], std::move(grad)); };

  switch (node.op) {
    case Op::leaf:
      break;
    case Op::matmul:
      if (wants(0)) push(0, matmul_nt(g, in(1)));
      if (wants(1)) push(1, matmul_tn(in(0), g));
      break;
    case Op::add:
      if (wants(0)) push(0, g);
      if (wants(1)) push(1, g);
      break;
    case Op::subtract:
      if (wants(0)) push(0, g);
      if (wants(1)) push(1, g * -1.0);
      break;
    case Op::multiply:
      if (wants(0)) push(0, hadamard(g, in(1)));
      if (wants(1)) push(1, hadamard(g, in(0)));
      break;
    case Op::add_row:
      if (wants(0)) push(0, g);
      if (wants(1)) {
        Matrix dr(1, g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) dr(0, c) += g(r, c);
        push(1, std::move(dr));
      }
      break;
    case Op::affine:
      push(0, g * node.a);
      break;
    case Op::relu: {
      Matrix dx = g;
      auto x = in(0).data();
      auto d = dx.data();
      for (std::size_t k = 0; k < d.size(); ++k)
        if (!(x[k] > 0.0)) d[k] = 0.0;
      push(0, std::move(dx));
      break;
    }
    case Op::sigmoid: {
      Matrix dx = g;
      auto y = node.value.data();
      auto d = dx.data();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] *= y[k] * (1.0 - y[k]);
      push(0, std::move(dx));
      break;
    }
    case Op::square: {
      Matrix dx = g;
      auto x = in(0).data();
      auto d = dx.data();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] *= 2.0 * x[k];
      push(0, std::move(dx));
      break;
    }
    case Op::log_clamped: {
      Matrix dx = g;
      auto x = in(0).data();
      auto d = dx.data();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = x[k] > node.a ? d[k] / x[k] : 0.0;
      push(0, std::move(dx));
      break;
    }
    case Op::row_softmax:
      push(0, softmax_backward_rows(node.value, g));
      break;
    case Op::col_softmax:
      push(0, softmax_backward_rows(node.value.transpose(), g.transpose()).transpose());
      break;
    case Op::transpose:
      push(0, g.transpose());
      break;
    case Op::sum:
      push(0, Matrix(in(0).rows(), in(0).cols(), g.item()));
      break;
    case Op::concat_cols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        const std::size_t width = in(k).cols();
        if (wants(k)) {
          Matrix part(g.rows(), width);
          for (std::size_t r = 0; r < g.rows(); ++r)
            std::copy_n(g.row(r).begin() + offset, width, part.row(r).begin());
          push(k, std::move(part));
        }
        offset += width;
      }
      break;
    }
    case Op::concat_rows: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        const std::size_t height = in(k).rows();
        if (wants(k)) {
          std::vector<double> part(g.data().begin() + offset * g.cols(),
                                   g.data().begin() + (offset + height) * g.cols());
          push(k, Matrix(height, g.cols(), std::move(part)));
        }
        offset += height;
      }
      break;
    }
    case Op::take_rows: {
      Matrix dx(in(0).rows(), in(0).cols());
      for (std::size_t i = 0; i < node.indices.size(); ++i) {
        auto dst = dx.row(node.indices[i]);
        auto src = g.row(i);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
      }
      push(0, std::move(dx));
      break;
    }
    case Op::place_rows:
      push(0, mvgae::take_rows(g, node.indices));
      break;
    case Op::scale_rows: {
      const Matrix& v = in(0);
      const Matrix& m = in(1);
      if (wants(0)) {
        Matrix dv(1, v.cols());
        for (std::size_t r = 0; r < m.rows(); ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < m.cols(); ++c) s += g(r, c) * m(r, c);
          dv(0, r) = s;
        }
        push(0, std::move(dv));
      }
      if (wants(1)) {
        Matrix dm = g;
        for (std::size_t r = 0; r < dm.rows(); ++r)
          for (double& x : dm.row(r)) x *= v(0, r);
        push(1, std::move(dm));
      }
      break;
    }
  }
}

}  // namespace mvgae
