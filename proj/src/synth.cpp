#include "mvgae/synth.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "mvgae/models.hpp"
#include "mvgae/rng.hpp"
#include "mvgae/snapshot.hpp"

namespace mvgae {

namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
  if (n_nodes < 4) throw std::invalid_argument("synth: n_nodes must be >= 4");
  if (n_views < 1) throw std::invalid_argument("synth: n_views must be >= 1");
  if (informative_view >= n_views) throw std::invalid_argument("synth: informative_view must be < n_views");
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) throw std::invalid_argument("synth: noise_level must lie in [0, 1]");
  if (!(edge_density > 0.0 && edge_density <= 1.0)) throw std::invalid_argument("synth: edge_density must lie in (0, 1]");
  if (communities() > n_nodes / 2) throw std::invalid_argument("synth: edge_density too low for n_nodes");
  if (label_dim < 1) throw std::invalid_argument("synth: label_dim must be >= 1");
}

Distractor parse_distractor(const std::string& name) {
  if (name == "uniform") return Distractor::uniform;
  if (name == "permuted") return Distractor::permuted;
  throw std::invalid_argument("unknown distractor '" + name + "' (expected uniform or permuted)");
}

std::string to_string(Distractor distractor) {
  return distractor == Distractor::uniform ? "uniform" : "permuted";
}

SynthFeatures parse_synth_features(const std::string& name) {
  if (name == "identity") return SynthFeatures::identity;
  if (name == "similarity") return SynthFeatures::similarity;
  throw std::invalid_argument("unknown feature mode '" + name + "' (expected identity or similarity)");
}

std::string to_string(SynthFeatures features) {
  return features == SynthFeatures::identity ? "identity" : "similarity";
}

std::size_t SyntheticSpec::communities() const {
  return std::max<std::size_t>(2, rounded_count(1.0 / edge_density, 1));
}

namespace {

Matrix noisy_similarity(const Matrix& links, double noise, Rng& rng) {
  const std::size_t n = links.rows();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = rng.uniform() < noise ? rng.uniform() : links(i, j);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

}  // namespace

MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.n_nodes;

  std::vector<std::size_t> group(n);
  const auto order = rng.permutation(n);
  const std::size_t k_groups = spec.communities();
  for (std::size_t k = 0; k < n; ++k) group[order[k]] = k % k_groups;

  MultiViewDataset ds;
  for (std::size_t i = 0; i < n; ++i) ds.node_ids.push_back("n" + std::to_string(i));
  ds.labels.types = spec.label_dim;
  ds.labels.kind = spec.label_dim > 1 ? LabelKind::multilabel : LabelKind::binary_links;
  if (spec.label_dim > 1) {
    for (std::size_t t = 0; t < spec.label_dim; ++t) ds.labels.type_names.push_back("type" + std::to_string(t));
  }
  ds.labels.values = Matrix(n, n * spec.label_dim);
  Matrix any(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (group[i] != group[j]) continue;
      const std::size_t t = group[i] % spec.label_dim;
      ds.labels.values(i, t * n + j) = 1.0;
      ds.labels.values(j, t * n + i) = 1.0;
      any(i, j) = any(j, i) = 1.0;
    }
  }

  for (std::size_t u = 0; u < spec.n_views; ++u) {
    Matrix links = any;
    double noise = spec.noise_level;
    if (u != spec.informative_view) {
      if (spec.distractor == Distractor::uniform) {
        noise = 1.0;
      } else {
        const auto relabel = rng.permutation(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) links(i, j) = any(relabel[i], relabel[j]);
      }
    }
    ViewGraph view;
    view.name = "view" + std::to_string(u);
    view.kernel = Kernel::precomputed;
    view.similarity = noisy_similarity(links, noise, rng);
    view.features = spec.features == SynthFeatures::identity ? one_hot_features(n) : view.similarity;
    ds.views.push_back(std::move(view));
  }
  validate_dataset(ds);
  return ds;
}

fs::path write_dataset(const MultiViewDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  std::string roster;
  for (const auto& id : ds.node_ids) roster += id + "\n";
  write_file_atomic(dir / "nodes.txt", roster);

  nlohmann::json views = nlohmann::json::array();
  for (const auto& v : ds.views) {
    nlohmann::json entry{{"name", v.name}, {"kernel", to_string(v.kernel)}};
    if (v.kernel == Kernel::rbf) entry["sigma"] = v.sigma;
    if (v.kernel == Kernel::precomputed) {
      write_file_atomic(dir / (v.name + "_similarity.csv"), format_table(ds.node_ids, ds.node_ids, v.similarity));
      entry["similarity"] = v.name + "_similarity.csv";
    }
    if (v.features) {
      std::vector<std::string> cols;
      for (std::size_t c = 0; c < v.features->cols(); ++c) cols.push_back("f" + std::to_string(c));
      write_file_atomic(dir / (v.name + "_features.csv"), format_table(ds.node_ids, cols, *v.features));
      entry["features"] = v.name + "_features.csv";
    }
    views.push_back(std::move(entry));
  }

  const std::size_t n = ds.node_count();
  std::string edges;
  for (std::size_t t = 0; t < ds.labels.types; ++t)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (ds.labels.values(i, t * n + j) != 0.0) {
          edges += ds.node_ids[i] + "\t" + ds.node_ids[j];
          if (ds.labels.kind == LabelKind::multilabel) edges += "\t" + ds.labels.type_names[t];
          edges += "\n";
        }
  write_file_atomic(dir / "labels.tsv", edges);

  nlohmann::json labels{{"path", "labels.tsv"}, {"format", "edge_list"}};
  if (ds.labels.kind == LabelKind::multilabel) labels["types"] = ds.labels.type_names;
  nlohmann::json manifest{{"nodes", "nodes.txt"}, {"views", views}, {"labels", labels}};
  if (!ds.defaults.empty()) manifest["defaults"] = ds.defaults;
  const fs::path path = dir / "manifest.json";
  write_file_atomic(path, manifest.dump(2) + "\n");
  return path;
}

fs::path write_synthetic(const SyntheticSpec& spec, const fs::path& dir) {
  return write_dataset(generate_synthetic(spec), dir);
}

}  // namespace mvgae
