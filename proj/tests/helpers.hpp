#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "mvgae/dataset.hpp"
#include "mvgae/matrix.hpp"
#include "mvgae/rng.hpp"

namespace testing {

inline mvgae::Matrix random_matrix(std::size_t r, std::size_t c, mvgae::Rng& rng, double lo = -1.0,
                                   double hi = 1.0) {
  mvgae::Matrix m(r, c);
  for (double& x : m.data()) x = rng.uniform(lo, hi);
  return m;
}

inline mvgae::Matrix random_symmetric(std::size_t n, mvgae::Rng& rng) {
  mvgae::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform();
  return m;
}

/// Random dataset: T views with unit-diagonal random similarities and real
/// features, and symmetric binary links of the given density.
inline mvgae::MultiViewDataset random_dataset(std::size_t n, std::size_t t, mvgae::Rng& rng,
                                              std::size_t feature_dim = 6, double density = 0.3) {
  mvgae::MultiViewDataset ds;
  for (std::size_t i = 0; i < n; ++i) ds.node_ids.push_back("n" + std::to_string(i));
  for (std::size_t u = 0; u < t; ++u) {
    mvgae::ViewGraph v;
    v.name = "v" + std::to_string(u);
    v.similarity = random_symmetric(n, rng);
    for (std::size_t i = 0; i < n; ++i) v.similarity(i, i) = 1.0;
    v.features = random_matrix(n, feature_dim, rng, 0.0, 1.0);
    ds.views.push_back(std::move(v));
  }
  ds.labels.values = mvgae::Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < density) ds.labels.values(i, j) = ds.labels.values(j, i) = 1.0;
  return ds;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mvgae_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
