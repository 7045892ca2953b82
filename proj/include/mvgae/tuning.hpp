#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvgae/experiment.hpp"

namespace mvgae {

/// Candidate values per training-config key; the search covers their
/// Cartesian product in the order given (first key varies slowest).
using TuningGrid = std::vector<std::pair<std::string, std::vector<double>>>;

/// Parses "key=v1,v2,...".
std::pair<std::string, std::vector<double>> parse_grid_axis(const std::string& text);

/// Tuning splits use seeds base_seed + kTuningSeedOffset + k, disjoint from
/// the evaluation seeds base_seed + r.
inline constexpr std::uint64_t kTuningSeedOffset = 1'000'000;

struct TuningTrial {
  nlohmann::json overrides;
  /// Validation ROC-AUC per tuning split; failed or undefined fits count 0.
  std::vector<double> val_auc;
  double mean = 0.0;
};

struct TuningResult {
  ModelSpec best;
  nlohmann::json best_overrides;
  std::vector<TuningTrial> trials;

  std::string to_csv() const;
};

/// Fits every grid point on `splits` tuning splits and keeps the one with the
/// highest mean validation ROC-AUC at the early-stopping epoch; ties go to the
/// earlier grid point. Only learned models can be tuned.
TuningResult tune_on_validation(const MultiViewDataset& dataset, const ModelSpec& spec,
                                const TuningGrid& grid, double fraction, double val_fraction,
                                std::size_t splits, std::uint64_t base_seed, std::size_t jobs = 1);

}  // namespace mvgae
