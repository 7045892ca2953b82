#include "mvgae/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvgae {

void LpConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("lp alpha must lie in (0, 1)");
  if (max_iters < 1) throw std::invalid_argument("lp max_iters must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("lp tolerance must be > 0");
}

LpNotConverged::LpNotConverged(std::size_t iterations, double residual)
    : std::runtime_error("label propagation did not converge in " + std::to_string(iterations) +
                         " iterations (residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

Matrix observed_labels(const LabelMatrix& labels, const Split& split) {
  const auto roles = node_roles(split);
  return hadamard(labels.values, cell_mask(labels, roles, {NodeRole::train, NodeRole::val},
                                           {NodeRole::train, NodeRole::val}));
}

Matrix nn_predict(const Matrix& similarity, const LabelMatrix& labels, const Split& split) {
  const std::size_t n = similarity.rows();
  if (!similarity.is_square() || labels.values.rows() != n) {
    throw std::invalid_argument("nn_predict: similarity " + similarity.shape_string() +
                                " does not match labels " + labels.values.shape_string());
  }
  const Matrix y0 = observed_labels(labels, split);
  Matrix scores(n, y0.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto out = scores.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double s = similarity(i, k);
      auto yk = y0.row(k);
      for (std::size_t c = 0; c < out.size(); ++c)
        if (yk[c] > 0.0 && s > out[c]) out[c] = s;
    }
  }
  return scores;
}

Matrix label_propagation(const Matrix& a_hat, const Matrix& seeds, const LpConfig& config) {
  config.validate();
  if (!a_hat.is_square() || a_hat.cols() != seeds.rows()) {
    throw std::invalid_argument("label_propagation: adjacency " + a_hat.shape_string() +
                                " does not match seeds " + seeds.shape_string());
  }
  const Matrix restart = seeds * (1.0 - config.alpha);
  Matrix f = seeds;
  double change = 0.0;
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    Matrix next = matmul(a_hat, f) * config.alpha + restart;
    change = max_abs_diff(next, f);
    f = std::move(next);
    if (change < config.tolerance) return f;
  }
  throw LpNotConverged(config.max_iters, change);
}

Matrix lp_predict(const Matrix& a_hat, const LabelMatrix& labels, const Split& split,
                  const LpConfig& config) {
  return label_propagation(a_hat, observed_labels(labels, split), config);
}

}  // namespace mvgae
