#pragma once

#include <span>
#include <stdexcept>

#include "mvgae/matrix.hpp"

namespace mvgae {

/// Raised when a ranking metric is undefined for the given labels.
class SingleClassError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// S = Y + Y^T for a square matrix.
Matrix symmetrize_scores(const Matrix& y);

/// Mann-Whitney form: P(pos > neg) + P(tie) / 2, via midranks.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

/// Average precision over a descending-score sweep; tied scores enter
/// together as one threshold step.
double pr_auc(std::span<const double> scores, std::span<const double> labels);

}  // namespace mvgae
