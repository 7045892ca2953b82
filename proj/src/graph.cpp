#include "mvgae/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvgae {

Matrix tanimoto_similarity(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  for (double v : features.data()) {
    if (v != 0.0 && v != 1.0) {
      throw std::invalid_argument("tanimoto_similarity: features must be binary, found " +
                                  std::to_string(v));
    }
  }
  std::vector<double> counts(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (double v : features.row(i)) counts[i] += v;

  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double both = 0.0;
      for (std::size_t k = 0; k < d; ++k) both += features(i, k) * features(j, k);
      const double either = counts[i] + counts[j] - both;
      const double value = either > 0.0 ? both / either : 0.0;
      s(i, j) = value;
      s(j, i) = value;
    }
  }
  return s;
}

Matrix rbf_similarity(const Matrix& features, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("rbf_similarity: sigma must be positive");
  }
  if (!features.all_finite()) throw std::invalid_argument("rbf_similarity: non-finite features");
  const std::size_t n = features.rows();
  const double scale = 1.0 / (2.0 * sigma * sigma);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist2 = 0.0;
      for (std::size_t k = 0; k < features.cols(); ++k) {
        const double diff = features(i, k) - features(j, k);
        dist2 += diff * diff;
      }
      const double value = std::exp(-dist2 * scale);
      s(i, j) = value;
      s(j, i) = value;
    }
  }
  return s;
}

Matrix normalize_adjacency(const Matrix& adjacency) {
  if (!adjacency.is_square()) {
    throw std::invalid_argument("normalize_adjacency: matrix must be square, got " +
                                adjacency.shape_string());
  }
  const std::size_t n = adjacency.rows();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a < 0.0 || !std::isfinite(a)) {
        throw std::invalid_argument("normalize_adjacency: entry (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") is negative or non-finite");
      }
      degree += a;
    }
    inv_sqrt[i] = 1.0 / std::sqrt(degree);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = inv_sqrt[i] * (adjacency(i, j) + (i == j ? 1.0 : 0.0)) * inv_sqrt[j];
  return out;
}

}  // namespace mvgae
