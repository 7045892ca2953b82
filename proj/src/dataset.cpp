#include "mvgae/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mvgae/graph.hpp"
#include "mvgae/rng.hpp"

namespace mvgae {

namespace fs = std::filesystem;

DatasetError::DatasetError(const fs::path& file, const std::string& location,
                           const std::string& message)
    : std::runtime_error(file.string() + (location.empty() ? "" : ":" + location) + ": " +
                         message),
      file_(file) {}

Kernel parse_kernel(const std::string& name) {
  if (name == "tanimoto" || name == "jaccard") return Kernel::tanimoto;
  if (name == "rbf") return Kernel::rbf;
  if (name == "precomputed") return Kernel::precomputed;
  throw std::invalid_argument("unknown kernel '" + name + "' (tanimoto | rbf | precomputed)");
}

std::string to_string(Kernel kernel) {
  switch (kernel) {
    case Kernel::tanimoto: return "tanimoto";
    case Kernel::rbf: return "rbf";
    case Kernel::precomputed: return "precomputed";
  }
  return "?";
}

std::size_t MultiViewDataset::view_index(const std::string& name) const {
  for (std::size_t i = 0; i < views.size(); ++i)
    if (views[i].name == name) return i;
  throw std::invalid_argument("unknown view '" + name + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(path, "", "cannot open file");
  return in;
}

double parse_number(const std::string& text, const fs::path& path, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DatasetError(path, where, "invalid number '" + text + "'");
  }
  return value;
}

std::string location(std::size_t line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> map;
  for (std::size_t i = 0; i < ids.size(); ++i) map.emplace(ids[i], i);
  return map;
}

/// Rows of `table` reordered to `node_ids`; every roster node must be present.
std::vector<std::size_t> align_rows(const std::vector<std::string>& ids,
                                    const std::vector<std::string>& node_ids,
                                    const fs::path& path, const char* axis) {
  const auto position = index_of(ids);
  const auto roster = index_of(node_ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!roster.count(ids[i])) {
      throw DatasetError(path, std::string(axis) + " " + std::to_string(i + 1),
                         "unknown node id '" + ids[i] + "'");
    }
  }
  if (ids.size() != node_ids.size()) {
    throw DatasetError(path, "", std::string("shape mismatch: ") + std::to_string(ids.size()) +
                                     " " + axis + "s for " + std::to_string(node_ids.size()) +
                                     " roster nodes");
  }
  std::vector<std::size_t> order;
  order.reserve(node_ids.size());
  for (const auto& id : node_ids) {
    auto it = position.find(id);
    if (it == position.end()) throw DatasetError(path, "", "node '" + id + "' missing");
    order.push_back(it->second);
  }
  return order;
}

Matrix aligned_square(const LabeledTable& table, const std::vector<std::string>& node_ids,
                      const fs::path& path) {
  if (table.values.rows() != table.values.cols()) {
    throw DatasetError(path, "", "shape mismatch: expected a square matrix, got " +
                                     table.values.shape_string());
  }
  const auto rows = align_rows(table.row_ids, node_ids, path, "row");
  const auto cols = align_rows(table.col_ids, node_ids, path, "column");
  const std::size_t n = node_ids.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = table.values(rows[i], cols[j]);
  return out;
}

void check_similarity(const Matrix& s, const fs::path& path) {
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) {
      const double v = s(i, j);
      if (v < 0.0 || v > 1.0) {
        throw DatasetError(path, "node pair (" + std::to_string(i) + "," + std::to_string(j) + ")",
                           "similarity " + std::to_string(v) + " outside [0, 1]");
      }
      if (std::abs(v - s(j, i)) > 1e-9) {
        throw DatasetError(path, "node pair (" + std::to_string(i) + "," + std::to_string(j) + ")",
                           "similarity matrix is not symmetric");
      }
    }
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

LabeledTable read_table(const fs::path& path) {
  auto in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;
  LabeledTable table;
  std::vector<double> data;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, ',');
    if (table.col_ids.empty() && cols == 0) {
      if (fields.size() < 2) throw DatasetError(path, location(line_no, 1), "header has no columns");
      table.col_ids.assign(fields.begin() + 1, fields.end());
      cols = table.col_ids.size();
      continue;
    }
    if (fields.size() != cols + 1) {
      throw DatasetError(path, "line " + std::to_string(line_no),
                         "shape mismatch: expected " + std::to_string(cols) + " values, got " +
                             std::to_string(fields.size() - 1));
    }
    table.row_ids.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c)
      data.push_back(parse_number(fields[c], path, location(line_no, c + 1)));
  }
  if (table.row_ids.empty()) throw DatasetError(path, "", "no data rows");
  table.values = Matrix(table.row_ids.size(), cols, std::move(data));
  return table;
}

std::string format_table(const std::vector<std::string>& row_ids,
                         const std::vector<std::string>& col_ids, const Matrix& values,
                         const std::string& corner) {
  std::string out = corner;
  for (const auto& id : col_ids) out += "," + id;
  out += "\n";
  char buf[32];
  for (std::size_t r = 0; r < values.rows(); ++r) {
    out += row_ids[r];
    for (double v : values.row(r)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out += ',';
      out.append(buf, ptr);
    }
    out += "\n";
  }
  return out;
}

std::vector<std::string> read_roster(const fs::path& path) {
  auto in = open_or_throw(path);
  std::vector<std::string> ids;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto id = trim(line);
    if (id.empty()) continue;
    if (!seen.insert(id).second) {
      throw DatasetError(path, "line " + std::to_string(line_no), "duplicate node id '" + id + "'");
    }
    ids.push_back(id);
  }
  if (ids.empty()) throw DatasetError(path, "", "empty node roster");
  return ids;
}

LabelMatrix read_edge_list(const fs::path& path, const std::vector<std::string>& node_ids,
                           const std::vector<std::string>& type_names) {
  auto in = open_or_throw(path);
  const auto roster = index_of(node_ids);
  struct Edge {
    std::size_t a, b;
    std::string type;
  };
  std::vector<Edge> edges;
  std::optional<bool> typed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2 && fields.size() != 3) {
      throw DatasetError(path, "line " + std::to_string(line_no),
                         "expected 2 or 3 tab-separated fields");
    }
    const bool has_type = fields.size() == 3;
    if (typed && *typed != has_type) {
      throw DatasetError(path, "line " + std::to_string(line_no), "mixed typed and untyped edges");
    }
    typed = has_type;
    Edge e{};
    for (int k = 0; k < 2; ++k) {
      auto it = roster.find(fields[k]);
      if (it == roster.end()) {
        throw DatasetError(path, location(line_no, k + 1), "unknown node id '" + fields[k] + "'");
      }
      (k == 0 ? e.a : e.b) = it->second;
    }
    if (e.a == e.b) throw DatasetError(path, "line " + std::to_string(line_no), "self-link");
    if (has_type) e.type = fields[2];
    edges.push_back(std::move(e));
  }

  LabelMatrix labels;
  const std::size_t n = node_ids.size();
  if (typed.value_or(false)) {
    labels.kind = LabelKind::multilabel;
    if (type_names.empty()) {
      std::set<std::string> names;
      for (const auto& e : edges) names.insert(e.type);
      labels.type_names.assign(names.begin(), names.end());
    } else {
      labels.type_names = type_names;
    }
  }
  labels.types = std::max<std::size_t>(1, labels.type_names.size());
  labels.values = Matrix(n, n * labels.types);
  std::map<std::string, std::size_t> type_index;
  for (std::size_t t = 0; t < labels.type_names.size(); ++t) type_index[labels.type_names[t]] = t;
  for (const auto& e : edges) {
    std::size_t t = 0;
    if (labels.kind == LabelKind::multilabel) {
      auto it = type_index.find(e.type);
      if (it == type_index.end()) throw DatasetError(path, "", "undeclared type '" + e.type + "'");
      t = it->second;
    }
    labels.values(e.a, t * n + e.b) = 1.0;
    labels.values(e.b, t * n + e.a) = 1.0;
  }
  return labels;
}

void validate_dataset(const MultiViewDataset& dataset) {
  const std::size_t n = dataset.node_count();
  if (n == 0) throw std::invalid_argument("dataset has no nodes");
  if (dataset.views.empty()) throw std::invalid_argument("dataset needs at least one view");
  for (const auto& v : dataset.views) {
    if (v.similarity.rows() != n || v.similarity.cols() != n) {
      throw std::invalid_argument("view '" + v.name + "' similarity is " +
                                  v.similarity.shape_string() + ", expected " +
                                  std::to_string(n) + "x" + std::to_string(n));
    }
    if (v.features && v.features->rows() != n) {
      throw std::invalid_argument("view '" + v.name + "' features have " +
                                  std::to_string(v.features->rows()) + " rows, expected " +
                                  std::to_string(n));
    }
  }
  const auto& y = dataset.labels.values;
  if (y.rows() != n || y.cols() != n * dataset.labels.types) {
    throw std::invalid_argument("label matrix is " + y.shape_string() + ", expected " +
                                std::to_string(n) + "x" + std::to_string(n * dataset.labels.types));
  }
  for (std::size_t t = 0; t < dataset.labels.types; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (y(i, t * n + i) != 0.0) throw std::invalid_argument("label diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        const double v = y(i, t * n + j);
        if (v != 0.0 && v != 1.0) throw std::invalid_argument("labels must be 0/1");
        if (v != y(j, t * n + i)) throw std::invalid_argument("label matrix must be symmetric");
      }
    }
  }
}

MultiViewDataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DatasetError(manifest_path, "", "cannot open manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError(manifest_path, "byte " + std::to_string(e.byte), e.what());
  }
  const fs::path base = manifest_path.parent_path();
  auto require = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
    if (!obj.is_object() || !obj.contains(key)) {
      throw DatasetError(manifest_path, "", std::string("missing key '") + key + "'");
    }
    return obj.at(key);
  };

  MultiViewDataset dataset;
  try {
    dataset.node_ids = read_roster(resolve(base, require(manifest, "nodes").get<std::string>()));

    const auto& views = require(manifest, "views");
    if (!views.is_array() || views.empty()) {
      throw DatasetError(manifest_path, "", "'views' must be a non-empty list");
    }
    for (const auto& entry : views) {
      ViewGraph view;
      view.name = require(entry, "name").get<std::string>();
      view.kernel = parse_kernel(entry.value("kernel", std::string("precomputed")));
      view.sigma = entry.value("sigma", 30.0);
      if (entry.contains("features")) {
        const fs::path path = resolve(base, entry.at("features").get<std::string>());
        auto table = read_table(path);
        const auto order = align_rows(table.row_ids, dataset.node_ids, path, "row");
        view.features = take_rows(table.values, order);
      }
      switch (view.kernel) {
        case Kernel::tanimoto:
        case Kernel::rbf: {
          if (!view.features) {
            throw DatasetError(manifest_path, "view '" + view.name + "'",
                               "kernel " + to_string(view.kernel) + " requires 'features'");
          }
          try {
            view.similarity = view.kernel == Kernel::tanimoto
                                  ? tanimoto_similarity(*view.features)
                                  : rbf_similarity(*view.features, view.sigma);
          } catch (const std::invalid_argument& e) {
            throw DatasetError(resolve(base, entry.at("features").get<std::string>()), "", e.what());
          }
          break;
        }
        case Kernel::precomputed: {
          const fs::path path = resolve(base, require(entry, "similarity").get<std::string>());
          view.similarity = aligned_square(read_table(path), dataset.node_ids, path);
          check_similarity(view.similarity, path);
          break;
        }
      }
      dataset.views.push_back(std::move(view));
    }

    const auto& labels = require(manifest, "labels");
    const fs::path label_path = resolve(base, require(labels, "path").get<std::string>());
    const std::string format = labels.value("format", std::string("edge_list"));
    if (format == "edge_list") {
      std::vector<std::string> types;
      if (labels.contains("types")) types = labels.at("types").get<std::vector<std::string>>();
      dataset.labels = read_edge_list(label_path, dataset.node_ids, types);
    } else if (format == "dense") {
      dataset.labels.values = aligned_square(read_table(label_path), dataset.node_ids, label_path);
    } else {
      throw DatasetError(manifest_path, "labels", "unknown label format '" + format + "'");
    }
    if (manifest.contains("defaults")) dataset.defaults = manifest.at("defaults");
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(manifest_path, "", e.what());
  }

  try {
    validate_dataset(dataset);
  } catch (const std::invalid_argument& e) {
    throw DatasetError(manifest_path, "", e.what());
  }
  return dataset;
}

std::vector<NodeRole> node_roles(const Split& split) {
  std::vector<NodeRole> roles(split.node_count(), NodeRole::train);
  for (auto i : split.val) roles.at(i) = NodeRole::val;
  for (auto i : split.test) roles.at(i) = NodeRole::test;
  return roles;
}

std::size_t rounded_count(double fraction, std::size_t count) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) + 0.5));
}

Split drug_holdout_split(std::size_t node_count, double fraction, double val_fraction,
                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1), got " +
                                std::to_string(val_fraction));
  }
  Rng rng(seed);
  const auto order = rng.permutation(node_count);
  const std::size_t n_test = rounded_count(fraction, node_count);
  const std::size_t n_val = rounded_count(val_fraction, node_count - n_test);

  Split split;
  split.fraction = fraction;
  split.val_fraction = val_fraction;
  split.seed = seed;
  split.test.assign(order.begin(), order.begin() + n_test);
  split.val.assign(order.begin() + n_test, order.begin() + n_test + n_val);
  split.train.assign(order.begin() + n_test + n_val, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Split drug_holdout_split(const MultiViewDataset& dataset, double fraction, double val_fraction,
                         std::uint64_t seed) {
  return drug_holdout_split(dataset.node_count(), fraction, val_fraction, seed);
}

void validate_split(const Split& split, std::size_t node_count) {
  std::vector<int> seen(node_count, 0);
  for (const auto* set : {&split.train, &split.val, &split.test}) {
    for (auto i : *set) {
      if (i >= node_count) throw std::invalid_argument("split index out of range");
      ++seen[i];
    }
  }
  for (int count : seen) {
    if (count != 1) throw std::invalid_argument("split index sets must partition the nodes");
  }
}

Matrix cell_mask(const LabelMatrix& labels, const std::vector<NodeRole>& role_of,
                 std::initializer_list<NodeRole> row_roles,
                 std::initializer_list<NodeRole> col_roles) {
  auto in = [](NodeRole r, std::initializer_list<NodeRole> set) {
    return std::find(set.begin(), set.end(), r) != set.end();
  };
  Matrix mask(labels.values.rows(), labels.values.cols());
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    if (!in(role_of[r], row_roles)) continue;
    for (std::size_t c = 0; c < mask.cols(); ++c)
      if (in(role_of[labels.column_node(c)], col_roles)) mask(r, c) = 1.0;
  }
  return mask;
}

}  // namespace mvgae
