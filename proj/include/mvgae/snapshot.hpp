#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvgae/experiment.hpp"

namespace mvgae {

inline constexpr int kSnapshotVersion = 1;

/// Everything needed to rebuild a trained model against its dataset.
struct Snapshot {
  int version = kSnapshotVersion;
  ModelSpec spec;
  Split split;
  std::string task_id = "all";
  std::vector<std::string> param_names;
  std::vector<Matrix> params;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
/// Overwrites the fields present in `j`; unknown keys are rejected.
void apply_train_config(TrainConfig& config, const nlohmann::json& j);

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(const nlohmann::json& j);

Snapshot capture_snapshot(const ModelSpec& spec, const Split& split, const LinkModel* model);

/// Rebuilds the trained model; the dataset must be the one it was trained on.
std::unique_ptr<LinkModel> restore_model(const Snapshot& snapshot, const MultiViewDataset& dataset);

void save_snapshot(const std::filesystem::path& path, const Snapshot& snapshot);
Snapshot load_snapshot(const std::filesystem::path& path);

/// Writes `content` to `path` via a ".partial" sibling renamed on success.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace mvgae
