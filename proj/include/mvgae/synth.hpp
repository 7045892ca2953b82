#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "mvgae/dataset.hpp"

namespace mvgae {

/// Planted-community benchmark. Nodes fall into K = max(2, round(1 /
/// edge_density)) equal groups; every pair inside a group links (type = group
/// mod label_dim) and pairs across groups never do. The informative view's
/// similarity is the link indicator with each off-diagonal entry replaced by
/// U(0, 1) noise with probability `noise_level`. Distractor views are either
/// pure U(0, 1) similarities or the same noisy process applied to a randomly
/// relabeled copy of the graph. Node features of a view are either identity
/// (one-hot) rows, mimicking similarity-only data, or the rows of its
/// similarity matrix.
enum class Distractor { uniform, permuted };
enum class SynthFeatures { identity, similarity };

Distractor parse_distractor(const std::string& name);
std::string to_string(Distractor distractor);
SynthFeatures parse_synth_features(const std::string& name);
std::string to_string(SynthFeatures features);

struct SyntheticSpec {
  std::size_t n_nodes = 120;
  std::size_t n_views = 3;
  std::size_t informative_view = 0;
  double noise_level = 0.2;
  double edge_density = 0.25;
  std::size_t label_dim = 1;
  std::uint64_t seed = 0;
  Distractor distractor = Distractor::uniform;
  SynthFeatures features = SynthFeatures::identity;

  void validate() const;
  std::size_t communities() const;
};

MultiViewDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes roster, per-view similarity and feature tables, the edge list, and
/// a manifest; returns the manifest path.
std::filesystem::path write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir);

/// Writes `dataset` in the on-disk manifest layout.
std::filesystem::path write_dataset(const MultiViewDataset& dataset, const std::filesystem::path& dir);

}  // namespace mvgae
