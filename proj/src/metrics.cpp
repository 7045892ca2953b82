#include "mvgae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mvgae {

namespace {

void require_same_length(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metric: " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(labels.size()) + " labels");
  }
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("metric: non-finite score");
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

Matrix symmetrize_scores(const Matrix& y) {
  if (!y.is_square()) throw std::invalid_argument("symmetrize_scores: non-square " + y.shape_string());
  Matrix s(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = i; j < y.cols(); ++j) {
      const double v = y(i, j) + y(j, i);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  require_same_length(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie group spanning positions [i, j) gets (i + j + 1) / 2.
  double positive_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0.5) {
        positive_rank_sum += midrank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(scores.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw SingleClassError("roc_auc: needs at least one positive and one negative label");
  }
  const double u = positive_rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double pr_auc(std::span<const double> scores, std::span<const double> labels) {
  require_same_length(scores, labels);
  double total_pos = 0.0;
  for (double l : labels) total_pos += l > 0.5 ? 1.0 : 0.0;
  if (total_pos == 0.0) throw SingleClassError("pr_auc: needs at least one positive label");

  const auto order = descending_order(scores);
  double tp = 0.0;
  double fp = 0.0;
  double prev_recall = 0.0;
  double ap = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] > 0.5 ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / total_pos;
    if (recall > prev_recall) {
      ap += (recall - prev_recall) * (tp / (tp + fp));
      prev_recall = recall;
    }
    i = j;
  }
  return ap;
}

}  // namespace mvgae
