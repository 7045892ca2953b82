#include "mvgae/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <thread>

#include "mvgae/fusion.hpp"
#include "mvgae/metrics.hpp"

namespace mvgae {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "nn") return ModelKind::nn;
  if (name == "lp") return ModelKind::lp;
  if (name == "constant") return ModelKind::constant;
  switch (parse_variant(name)) {
    case Variant::mvgcn: return ModelKind::mvgcn;
    case Variant::semigae: return ModelKind::semigae;
    case Variant::attsemigae: return ModelKind::attsemigae;
    case Variant::transgae: return ModelKind::transgae;
    case Variant::atttransgae: return ModelKind::atttransgae;
  }
  throw std::invalid_argument("unknown model '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::nn: return "nn";
    case ModelKind::lp: return "lp";
    case ModelKind::constant: return "constant";
    default: return to_string(*as_variant(kind));
  }
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"mvgcn",       "semigae", "attsemigae", "transgae",
                                                 "atttransgae", "nn",      "lp"};
  return names;
}

std::optional<Variant> as_variant(ModelKind kind) {
  switch (kind) {
    case ModelKind::mvgcn: return Variant::mvgcn;
    case ModelKind::semigae: return Variant::semigae;
    case ModelKind::attsemigae: return Variant::attsemigae;
    case ModelKind::transgae: return Variant::transgae;
    case ModelKind::atttransgae: return Variant::atttransgae;
    default: return std::nullopt;
  }
}

std::vector<std::size_t> resolve_views(const MultiViewDataset& dataset,
                                       const std::vector<std::string>& names) {
  std::vector<std::size_t> indices;
  for (const auto& name : names) indices.push_back(dataset.view_index(name));
  if (indices.empty()) {
    for (std::size_t u = 0; u < dataset.views.size(); ++u) indices.push_back(u);
  }
  return indices;
}

ScoredCells collect_test_cells(const Matrix& raw_scores, const LabelMatrix& labels,
                               const Split& split) {
  const std::size_t n = labels.values.rows();
  require_same_shape(raw_scores, labels.values, "collect_test_cells");
  const auto roles = node_roles(split);
  ScoredCells out;
  for (std::size_t t = 0; t < labels.types; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (roles[i] != NodeRole::test && roles[j] != NodeRole::test) continue;
        out.scores.push_back(raw_scores(i, t * n + j) + raw_scores(j, t * n + i));
        out.labels.push_back(labels.values(i, t * n + j));
        out.cells.push_back({i, j, t});
      }
    }
  }
  return out;
}

FitResult fit_and_predict(const MultiViewDataset& dataset, const ModelSpec& spec,
                          const Split& split) {
  const auto views = resolve_views(dataset, spec.views);
  FitResult result;
  switch (spec.kind) {
    case ModelKind::constant:
      result.scores = Matrix(dataset.labels.values.rows(), dataset.labels.values.cols(), 0.5);
      return result;
    case ModelKind::nn: {
      std::vector<Matrix> sims;
      for (auto u : views) sims.push_back(dataset.views[u].similarity);
      result.scores = nn_predict(linear_fuse(sims), dataset.labels, split);
      return result;
    }
    case ModelKind::lp: {
      auto problem = make_problem(dataset, split, views);
      result.scores = lp_predict(linear_fuse(problem->norm_adjacency), dataset.labels, split, spec.lp);
      return result;
    }
    default:
      break;
  }
  auto problem = make_problem(dataset, split, views);
  result.model = make_model(*as_variant(spec.kind), problem, spec.options);
  result.history = train(*result.model, spec.options.train);
  result.scores = result.model->predict();
  if (is_attentive(result.model->variant())) result.attention = result.model->attention();
  return result;
}

void EvalReport::aggregate() {
  std::vector<const RepetitionResult*> ok;
  failures = 0;
  for (const auto& r : repetitions) {
    if (r.failed) {
      ++failures;
    } else {
      ok.push_back(&r);
    }
  }
  auto stats = [&](double RepetitionResult::*field, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (ok.empty()) {
      mean = std::nan("");
      sd = std::nan("");
      return;
    }
    for (auto* r : ok) mean += r->*field;
    mean /= static_cast<double>(ok.size());
    if (ok.size() < 2) return;
    double ss = 0.0;
    for (auto* r : ok) ss += (r->*field - mean) * (r->*field - mean);
    sd = std::sqrt(ss / static_cast<double>(ok.size() - 1));
  };
  stats(&RepetitionResult::roc_auc, roc_mean, roc_std);
  stats(&RepetitionResult::pr_auc, pr_mean, pr_std);
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, ptr);
}

}  // namespace

std::string EvalReport::to_text() const {
  const std::size_t ok = repetitions.size() - failures;
  std::string out;
  out += "model: " + model + "\n";
  out += "test_fraction: " + num(fraction) + "\n";
  out += "repetitions: " + std::to_string(repetitions.size()) + "\n";
  out += "failed: " + std::to_string(failures) + "\n";
  out += "roc_auc: " + fixed(roc_mean) + " ± " + fixed(roc_std) + "\n";
  out += "pr_auc: " + fixed(pr_mean) + " ± " + fixed(pr_std) + "\n";
  out += "roc_auc_mean: " + num(roc_mean) + "\n";
  out += "roc_auc_std: " + num(roc_std) + "\n";
  out += "pr_auc_mean: " + num(pr_mean) + "\n";
  out += "pr_auc_std: " + num(pr_std) + "\n";
  if (ok == 1) out += "note: single repetition; standard deviation reported as 0\n";
  out += "\n";
  out += to_csv();
  return out;
}

std::string EvalReport::to_csv() const {
  std::string out = "repetition,seed,roc_auc,pr_auc,epochs,status";
  for (const auto& v : view_names) out += ",attention/" + v;
  out += "\n";
  for (const auto& r : repetitions) {
    out += std::to_string(r.index) + "," + std::to_string(r.seed) + ",";
    out += r.failed ? "nan,nan," : num(r.roc_auc) + "," + num(r.pr_auc) + ",";
    out += std::to_string(r.epochs) + ",";
    out += r.failed ? "failed" : "ok";
    if (!view_names.empty()) {
      for (std::size_t u = 0; u < view_names.size(); ++u)
        out += "," + (u < r.attention.size() ? num(r.attention[u]) : std::string("nan"));
    }
    out += "\n";
  }
  return out;
}

EvalReport run_experiment(const MultiViewDataset& dataset, const ModelSpec& spec, double fraction,
                          std::size_t repetitions, std::uint64_t base_seed, std::size_t jobs,
                          double val_fraction) {
  if (repetitions < 1) throw std::invalid_argument("run_experiment: repetitions must be >= 1");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("run_experiment: fraction must lie in (0, 1)");
  }
  EvalReport report;
  report.model = to_string(spec.kind);
  report.fraction = fraction;
  if (spec.kind == ModelKind::attsemigae || spec.kind == ModelKind::atttransgae) {
    for (auto u : resolve_views(dataset, spec.views)) report.view_names.push_back(dataset.views[u].name);
  }
  report.repetitions.resize(repetitions);

  auto run_one = [&](std::size_t rep) {
    RepetitionResult& r = report.repetitions[rep];
    r.index = rep;
    r.seed = base_seed + rep;
    try {
      const Split split = drug_holdout_split(dataset, fraction, val_fraction, r.seed);
      ModelSpec local = spec;
      local.options.train.seed = r.seed;
      FitResult fit = fit_and_predict(dataset, local, split);
      const ScoredCells cells = collect_test_cells(fit.scores, dataset.labels, split);
      r.roc_auc = roc_auc(cells.scores, cells.labels);
      r.pr_auc = pr_auc(cells.scores, cells.labels);
      r.epochs = fit.history.stopping_epoch;
      if (fit.attention) {
        std::vector<Matrix> rows;
        for (std::size_t u = 0; u < fit.attention->rows(); ++u) {
          const std::size_t idx[] = {u};
          rows.push_back(take_rows(*fit.attention, idx));
        }
        r.attention = mean_attention(rows);
      }
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, repetitions));
  if (jobs == 1) {
    for (std::size_t rep = 0; rep < repetitions; ++rep) run_one(rep);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t rep; (rep = next.fetch_add(1)) < repetitions;) run_one(rep);
      });
    }
    for (auto& t : workers) t.join();
  }
  report.aggregate();
  return report;
}

}  // namespace mvgae
