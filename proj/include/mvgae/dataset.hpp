#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvgae/matrix.hpp"

namespace mvgae {

/// Ingestion failure carrying the offending file and a location within it.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::filesystem::path& file, const std::string& location,
               const std::string& message);
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
};

enum class Kernel { tanimoto, rbf, precomputed };

Kernel parse_kernel(const std::string& name);
std::string to_string(Kernel kernel);

struct ViewGraph {
  std::string name;
  Matrix similarity;
  std::optional<Matrix> features;
  Kernel kernel = Kernel::precomputed;
  double sigma = 30.0;
};

enum class LabelKind { binary_links, multilabel };

/// N x M labels. Multilabel targets with L interaction types are flattened so
/// that column t * N + j holds the type-t link between a row node and node j.
struct LabelMatrix {
  Matrix values;
  LabelKind kind = LabelKind::binary_links;
  std::size_t types = 1;
  std::vector<std::string> type_names;

  /// Node index a label column refers to.
  std::size_t column_node(std::size_t column) const { return column % values.rows(); }
};

struct MultiViewDataset {
  std::vector<std::string> node_ids;
  std::vector<ViewGraph> views;
  LabelMatrix labels;
  /// Training hyperparameter defaults declared by the manifest.
  nlohmann::json defaults = nlohmann::json::object();

  std::size_t node_count() const { return node_ids.size(); }
  std::size_t view_index(const std::string& name) const;
};

/// Throws std::invalid_argument if any dataset invariant is violated.
void validate_dataset(const MultiViewDataset& dataset);

/// Reads a JSON manifest:
///   {"nodes": "nodes.txt",
///    "views": [{"name", "kernel": "tanimoto"|"rbf"|"precomputed",
///               "features"?, "similarity"?, "sigma"?}],
///    "labels": {"path", "format": "dense"|"edge_list"},
///    "defaults": {...}}
/// Relative paths resolve against the manifest's directory.
MultiViewDataset load_dataset(const std::filesystem::path& manifest_path);

struct LabeledTable {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Matrix values;
};

/// Comma-separated table: first row holds column ids (its first cell is
/// ignored), first column holds row ids.
LabeledTable read_table(const std::filesystem::path& path);
std::string format_table(const std::vector<std::string>& row_ids,
                         const std::vector<std::string>& col_ids, const Matrix& values,
                         const std::string& corner = "id");

std::vector<std::string> read_roster(const std::filesystem::path& path);

/// Tab-separated "a<TAB>b[<TAB>type]" lines.
LabelMatrix read_edge_list(const std::filesystem::path& path,
                           const std::vector<std::string>& node_ids,
                           const std::vector<std::string>& type_names = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  double fraction = 0.25;
  double val_fraction = 0.10;
  std::uint64_t seed = 0;

  std::size_t node_count() const { return train.size() + val.size() + test.size(); }
};

enum class NodeRole : std::uint8_t { train, val, test };

std::vector<NodeRole> node_roles(const Split& split);

/// Round-half-up of fraction * count.
std::size_t rounded_count(double fraction, std::size_t count);

/// Holds out round(fraction * N) nodes for testing, then round(val_fraction *
/// remainder) of the rest for validation. Index sets are sorted.
Split drug_holdout_split(std::size_t node_count, double fraction, double val_fraction,
                         std::uint64_t seed);
Split drug_holdout_split(const MultiViewDataset& dataset, double fraction = 0.25,
                         double val_fraction = 0.10, std::uint64_t seed = 0);

void validate_split(const Split& split, std::size_t node_count);

/// 1 on label cells whose row and column nodes both have a role in `roles`.
Matrix cell_mask(const LabelMatrix& labels, const std::vector<NodeRole>& role_of,
                 std::initializer_list<NodeRole> row_roles,
                 std::initializer_list<NodeRole> col_roles);

}  // namespace mvgae
