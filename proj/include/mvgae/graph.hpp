#pragma once

#include "mvgae/matrix.hpp"

namespace mvgae {

/// Intersection over union of binary rows. A pair of all-zero rows (including
/// a zero row against itself) scores 0.
Matrix tanimoto_similarity(const Matrix& features);

/// exp(-|x_i - x_j|^2 / (2 sigma^2)); diagonal exactly 1.
Matrix rbf_similarity(const Matrix& features, double sigma);

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I.
Matrix normalize_adjacency(const Matrix& adjacency);

inline constexpr const char* kRbfConvention = "exp(-||xi-xj||^2/(2*sigma^2))";

}  // namespace mvgae
