#pragma once

#include <cstddef>
#include <stdexcept>

#include "mvgae/dataset.hpp"
#include "mvgae/matrix.hpp"

namespace mvgae {

struct LpConfig {
  double alpha = 0.9;
  std::size_t max_iters = 1000;
  double tolerance = 1e-6;

  void validate() const;
};

class LpNotConverged : public std::runtime_error {
 public:
  LpNotConverged(std::size_t iterations, double residual);
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Label cells observed during training: both endpoints outside the test set.
Matrix observed_labels(const LabelMatrix& labels, const Split& split);

/// score(i, c) = max similarity(i, k) over nodes k != i with an observed
/// positive in cell c; 0 if there is none.
Matrix nn_predict(const Matrix& similarity, const LabelMatrix& labels, const Split& split);

/// F <- alpha A F + (1 - alpha) Y0 from F = Y0 until the largest entry change
/// drops below the tolerance. `a_hat` is a normalized adjacency.
Matrix lp_predict(const Matrix& a_hat, const LabelMatrix& labels, const Split& split,
                  const LpConfig& config = {});

/// The propagation iteration on an explicit seed matrix.
Matrix label_propagation(const Matrix& a_hat, const Matrix& seeds, const LpConfig& config);

}  // namespace mvgae
