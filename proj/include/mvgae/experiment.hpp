#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mvgae/baselines.hpp"
#include "mvgae/dataset.hpp"
#include "mvgae/models.hpp"

namespace mvgae {

enum class ModelKind { mvgcn, semigae, attsemigae, transgae, atttransgae, nn, lp, constant };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);
/// Names accepted on the command line.
const std::vector<std::string>& model_names();
std::optional<Variant> as_variant(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::attsemigae;
  /// View names to use; empty means all views.
  std::vector<std::string> views;
  ModelOptions options;
  LpConfig lp;
};

std::vector<std::size_t> resolve_views(const MultiViewDataset& dataset,
                                       const std::vector<std::string>& names);

struct ScoredCells {
  std::vector<double> scores;
  std::vector<double> labels;
  /// (row node, column node, type) of each cell.
  std::vector<std::array<std::size_t, 3>> cells;
};

/// Symmetrizes each type block of the N x (N*L) score matrix and collects
/// every unordered pair (i < j) with at least one test endpoint.
ScoredCells collect_test_cells(const Matrix& raw_scores, const LabelMatrix& labels,
                               const Split& split);

struct FitResult {
  Matrix scores;
  std::optional<Matrix> attention;
  TrainHistory history;
  std::unique_ptr<LinkModel> model;
};

/// Trains (for learned models) and predicts N x M raw scores on one split.
/// The model seed is taken from spec.options.train.seed.
FitResult fit_and_predict(const MultiViewDataset& dataset, const ModelSpec& spec,
                          const Split& split);

struct RepetitionResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  std::size_t epochs = 0;
  bool failed = false;
  std::string error;
  /// Per-view mean attention weights (attentive variants).
  std::vector<double> attention;
};

struct EvalReport {
  std::string model;
  double fraction = 0.0;
  std::vector<std::string> view_names;
  std::vector<RepetitionResult> repetitions;
  double roc_mean = 0.0;
  double roc_std = 0.0;
  double pr_mean = 0.0;
  double pr_std = 0.0;
  std::size_t failures = 0;

  /// Recomputes the aggregates from the successful repetitions (sample
  /// standard deviation; 0 for a single repetition).
  void aggregate();
  std::string to_text() const;
  std::string to_csv() const;
};

/// Repeats the hold-out experiment: repetition r uses seed base_seed + r for
/// both the split and the model. Repetitions may run on `jobs` threads; the
/// report does not depend on the thread count.
EvalReport run_experiment(const MultiViewDataset& dataset, const ModelSpec& spec, double fraction,
                          std::size_t repetitions, std::uint64_t base_seed, std::size_t jobs = 1,
                          double val_fraction = 0.10);

}  // namespace mvgae
