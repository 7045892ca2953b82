#include "mvgae/tuning.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "mvgae/snapshot.hpp"

namespace mvgae {

std::pair<std::string, std::vector<double>> parse_grid_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw std::invalid_argument("tuning axis '" + text + "' must look like key=v1,v2");
  }
  std::pair<std::string, std::vector<double>> axis{text.substr(0, eq), {}};
  std::size_t pos = eq + 1;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    double v = 0.0;
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw std::invalid_argument("tuning axis '" + text + "' has a non-numeric value");
    }
    axis.second.push_back(v);
    pos = comma + 1;
  }
  TrainConfig probe;
  apply_train_config(probe, nlohmann::json{{axis.first, axis.second.front()}});
  return axis;
}

namespace {

nlohmann::json grid_point(const TuningGrid& grid, std::size_t index) {
  nlohmann::json j = nlohmann::json::object();
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    const double v = it->second[index % it->second.size()];
    index /= it->second.size();
    if (v == std::floor(v) && std::abs(v) < 1e15) {
      j[it->first] = static_cast<long long>(v);
    } else {
      j[it->first] = v;
    }
  }
  return j;
}

}  // namespace

std::string TuningResult::to_csv() const {
  std::string out = "config,mean_val_auc\n";
  for (const auto& t : trials) {
    std::string cfg;
    for (const auto& [k, v] : t.overrides.items()) cfg += (cfg.empty() ? "" : ";") + k + "=" + v.dump();
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, t.mean);
    out += cfg + "," + std::string(buf, ptr) + "\n";
  }
  return out;
}

TuningResult tune_on_validation(const MultiViewDataset& dataset, const ModelSpec& spec,
                                const TuningGrid& grid, double fraction, double val_fraction,
                                std::size_t splits, std::uint64_t base_seed, std::size_t jobs) {
  if (!as_variant(spec.kind)) {
    throw std::invalid_argument("tuning applies to learned models only, not " + to_string(spec.kind));
  }
  if (splits < 1) throw std::invalid_argument("tuning needs at least one split");
  std::size_t points = 1;
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw std::invalid_argument("tuning axis '" + key + "' has no values");
    points *= values.size();
  }

  TuningResult result;
  result.trials.resize(points);
  std::vector<ModelSpec> specs(points, spec);
  for (std::size_t p = 0; p < points; ++p) {
    result.trials[p].overrides = grid_point(grid, p);
    result.trials[p].val_auc.assign(splits, 0.0);
    apply_train_config(specs[p].options.train, result.trials[p].overrides);
    specs[p].options.train.validate();
  }

  const std::size_t total = points * splits;
  auto run_one = [&](std::size_t job) {
    const std::size_t p = job / splits;
    const std::size_t k = job % splits;
    try {
      const std::uint64_t seed = base_seed + kTuningSeedOffset + k;
      const Split split = drug_holdout_split(dataset, fraction, val_fraction, seed);
      ModelSpec local = specs[p];
      local.options.train.seed = seed;
      const FitResult fit = fit_and_predict(dataset, local, split);
      const double auc = fit.model->validate().metric;
      if (std::isfinite(auc)) result.trials[p].val_auc[k] = auc;
    } catch (const std::exception&) {
      // Counts as 0.
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, total));
  if (jobs == 1) {
    for (std::size_t j = 0; j < total; ++j) run_one(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < total;) run_one(j);
      });
    }
    for (auto& t : workers) t.join();
  }

  std::size_t best = 0;
  for (std::size_t p = 0; p < points; ++p) {
    auto& t = result.trials[p];
    t.mean = 0.0;
    for (double v : t.val_auc) t.mean += v;
    t.mean /= static_cast<double>(splits);
    if (t.mean > result.trials[best].mean) best = p;
  }
  result.best = specs[best];
  result.best_overrides = result.trials[best].overrides;
  return result;
}

}  // namespace mvgae
