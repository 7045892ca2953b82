#include "mvgae/matrix.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvgae {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_nonempty(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("matrix dimensions must be at least 1x1, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_nonempty(rows, cols);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_nonempty(rows, cols);
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("matrix data length " + std::to_string(data_.size()) +
                                " does not match " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  require_nonempty(rows_, cols_);
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Matrix::item() const {
  if (!is_scalar()) throw std::invalid_argument("item() on non-scalar " + shape_string());
  return data_[0];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

namespace {

// Neumaier compensated summation: keeps reductions over large matrices
// accurate to a few ulps, which finite-difference checks rely on.
template <typename F>
double compensated_sum(const std::vector<double>& values, F term) {
  double s = 0.0;
  double c = 0.0;
  for (double v : values) {
    const double x = term(v);
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace

double Matrix::sum() const {
  return compensated_sum(data_, [](double v) { return v; });
}

double Matrix::squared_norm() const {
  return compensated_sum(data_, [](double v) { return v * v; });
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.empty()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" + a.shape_string() +
                                " vs " + b.shape_string() + ")");
  }
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || a.empty() || b.empty()) {
    throw std::invalid_argument("matmul: shape mismatch (" + a.shape_string() + ") x (" +
                                b.shape_string() + ")");
  }
  Matrix out(a.rows(), b.cols());
  Eigen::Map<const RowMajor> ea(a.data().data(), a.rows(), a.cols());
  Eigen::Map<const RowMajor> eb(b.data().data(), b.rows(), b.cols());
  Eigen::Map<RowMajor> eo(out.data().data(), out.rows(), out.cols());
  eo.noalias() = ea * eb;
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "multiply");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = sigmoid(v);
  return out;
}

Matrix square(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v *= v;
  return out;
}

Matrix row_softmax(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

Matrix col_softmax(const Matrix& m) {
  return row_softmax(m.transpose()).transpose();
}

Matrix concat_cols(std::span<const Matrix> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts[0].rows() || p.empty()) {
      throw std::invalid_argument("concat_cols: row count mismatch (" + parts[0].shape_string() +
                                  " vs " + p.shape_string() + ")");
    }
    cols += p.cols();
  }
  Matrix out(parts[0].rows(), cols);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      std::copy(p.row(r).begin(), p.row(r).end(), out.row(r).begin() + offset);
      offset += p.cols();
    }
  }
  return out;
}

Matrix concat_rows(std::span<const Matrix> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != parts[0].cols() || p.empty()) {
      throw std::invalid_argument("concat_rows: column count mismatch (" +
                                  parts[0].shape_string() + " vs " + p.shape_string() + ")");
    }
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * parts[0].cols());
  for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return Matrix(rows, parts[0].cols(), std::move(data));
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) throw std::out_of_range("take_rows: row index out of range");
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace mvgae
