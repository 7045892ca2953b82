#include "mvgae/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvgae/experiment.hpp"
#include "mvgae/graph.hpp"
#include "mvgae/metrics.hpp"
#include "mvgae/snapshot.hpp"
#include "mvgae/synth.hpp"
#include "mvgae/tuning.hpp"

namespace mvgae {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// Hyperparameter flags; only the ones given on the command line override.
struct TrainFlags {
  std::map<std::string, double> reals;
  std::map<std::string, std::size_t> counts;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> head_mode;
  std::optional<std::string> stop_on;

  void add(CLI::App& app) {
    for (const char* key : {"learning_rate", "dropout", "l2", "lambda", "mu"}) {
      std::string flag = "--" + std::string(key);
      std::replace(flag.begin(), flag.end(), '_', '-');
      app.add_option_function<double>(flag, [this, key](double v) { reals[key] = v; });
    }
    for (const char* key : {"hidden_units", "second_layer_units", "early_stop_window", "max_epochs"}) {
      std::string flag = "--" + std::string(key);
      std::replace(flag.begin(), flag.end(), '_', '-');
      app.add_option_function<std::size_t>(flag, [this, key](std::size_t v) { counts[key] = v; });
    }
    app.add_option_function<std::uint64_t>("--seed", [this](std::uint64_t v) { seed = v; },
                                           "Model seed (evaluate: base seed)");
    app.add_option_function<std::string>("--head-mode", [this](const std::string& v) { head_mode = v; })
        ->check(CLI::IsMember({"softmax", "sigmoid"}));
    app.add_option_function<std::string>("--stop-on", [this](const std::string& v) { stop_on = v; })
        ->check(CLI::IsMember({"loss", "auc"}));
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : reals) j[k] = v;
    for (const auto& [k, v] : counts) j[k] = v;
    if (seed) j["seed"] = *seed;
    if (head_mode) j["head_mode"] = *head_mode;
    if (stop_on) j["stop_on"] = *stop_on;
    return j;
  }
};

// Keys a manifest's "defaults" block may carry besides TrainConfig fields.
struct RunDefaults {
  double fraction = 0.25;
  double val_fraction = 0.10;
  std::size_t repetitions = 50;
  std::vector<std::string> views;
};

struct ModelFlags {
  std::string manifest;
  std::string model = "attsemigae";
  std::optional<double> fraction;
  std::optional<double> val_fraction;
  std::vector<std::string> views;
  std::string out_dir = ".";
  std::string embedding = "softmax";
  std::string logits_from = "normalized";
  bool symmetrize = false;
  bool renormalize = false;
  bool one_hot = false;
  LpConfig lp;
  TrainFlags train;
  TuningGrid tune;
  std::size_t tune_splits = 3;

  void add(CLI::App& app) {
    app.add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
    app.add_option("--model", model, "Model name")->check(CLI::IsMember(model_names()));
    app.add_option_function<double>("--fraction", [this](double v) { fraction = v; },
                                    "Fraction of nodes held out for testing")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option_function<double>("--val-fraction", [this](double v) { val_fraction = v; },
                                    "Fraction of the remaining nodes used for validation")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--views", views, "Comma-separated view names (default: all)")->delimiter(',');
    app.add_option("--out-dir", out_dir, "Output directory");
    app.add_option("--embedding", embedding)->check(CLI::IsMember({"softmax", "relu"}));
    app.add_option("--attention-logits", logits_from)->check(CLI::IsMember({"normalized", "raw"}));
    app.add_flag("--symmetrize", symmetrize, "Symmetrize the attentive fusion");
    app.add_flag("--renormalize", renormalize, "Re-normalize linear fusion output");
    app.add_flag("--one-hot-missing-features", one_hot);
    app.add_option("--lp-alpha", lp.alpha);
    app.add_option("--lp-max-iters", lp.max_iters);
    app.add_option("--lp-tolerance", lp.tolerance);
    train.add(app);
    app.add_option_function<std::vector<std::string>>(
           "--tune",
           [this](const std::vector<std::string>& axes) {
             for (const auto& a : axes) {
               try {
                 tune.push_back(parse_grid_axis(a));
               } catch (const std::exception& e) {
                 throw CLI::ValidationError("--tune", e.what());
               }
             }
           },
           "Grid axis key=v1,v2 searched on validation splits (repeatable)")
        ->take_all();
    app.add_option("--tune-splits", tune_splits, "Tuning splits per grid point")
        ->check(CLI::PositiveNumber);
  }

  // Replaces the training config by the best grid point, if a grid was given.
  std::optional<TuningResult> maybe_tune(const MultiViewDataset& ds, ModelSpec& spec,
                                         const RunDefaults& run, std::size_t jobs) const {
    if (tune.empty()) return std::nullopt;
    TuningResult result = tune_on_validation(ds, spec, tune, run.fraction, run.val_fraction,
                                             tune_splits, spec.options.train.seed, jobs);
    spec = result.best;
    return result;
  }

  // flag > manifest default > built-in default.
  ModelSpec resolve(const MultiViewDataset& ds, RunDefaults& run) const {
    json train_defaults = json::object();
    for (const auto& [key, value] : ds.defaults.items()) {
      if (key == "fraction") run.fraction = value.get<double>();
      else if (key == "val_fraction") run.val_fraction = value.get<double>();
      else if (key == "repetitions") run.repetitions = value.get<std::size_t>();
      else if (key == "views") run.views = value.get<std::vector<std::string>>();
      else train_defaults[key] = value;
    }
    if (fraction) run.fraction = *fraction;
    if (val_fraction) run.val_fraction = *val_fraction;
    if (!views.empty()) run.views = views;

    ModelSpec spec;
    spec.kind = parse_model_kind(model);
    spec.views = run.views;
    apply_train_config(spec.options.train, train_defaults);
    apply_train_config(spec.options.train, train.to_json());
    spec.options.train.validate();
    spec.options.embedding = embedding == "relu" ? EmbeddingActivation::relu : EmbeddingActivation::softmax;
    spec.options.fusion.logits_from_normalized = logits_from == "normalized";
    spec.options.fusion.symmetrize = symmetrize;
    spec.options.fusion.renormalize = renormalize;
    spec.options.one_hot_missing_features = one_hot;
    spec.lp = lp;
    spec.lp.validate();
    resolve_views(ds, spec.views);
    return spec;
  }
};

json config_echo(const std::string& command, const fs::path& manifest, const MultiViewDataset& ds,
                 const ModelSpec& spec, const RunDefaults& run,
                 const std::optional<TuningResult>& tuning = std::nullopt) {
  const Snapshot shape = capture_snapshot(spec, Split{}, nullptr);
  json snap = to_json(shape);
  json views = json::array();
  for (auto u : resolve_views(ds, spec.views)) {
    const auto& v = ds.views[u];
    json entry{{"name", v.name}, {"kernel", to_string(v.kernel)}};
    if (v.kernel == Kernel::rbf) {
      entry["sigma"] = v.sigma;
      entry["convention"] = kRbfConvention;
    } else if (v.kernel == Kernel::tanimoto) {
      entry["convention"] = "|a&b|/|a|b|; 0 for two empty rows";
    }
    views.push_back(std::move(entry));
  }
  json echo{{"command", command},
              {"manifest", manifest.string()},
              {"model", snap["model"]},
              {"views", views},
              {"train", snap["train"]},
              {"fusion", snap["fusion"]},
              {"embedding", snap["embedding"]},
              {"one_hot_missing_features", snap["one_hot_missing_features"]},
              {"lp", snap["lp"]},
              {"fraction", run.fraction},
              {"val_fraction", run.val_fraction},
              {"repetitions", run.repetitions},
              {"adjacency", "D^-1/2 (A+I) D^-1/2"}};
  if (tuning) {
    json trials = json::array();
    for (const auto& t : tuning->trials) trials.push_back({{"overrides", t.overrides}, {"mean_val_auc", t.mean}});
    echo["tuning"] = {{"selected", tuning->best_overrides},
                      {"seed_offset", kTuningSeedOffset},
                      {"splits", tuning->trials.front().val_auc.size()},
                      {"trials", trials}};
  }
  return echo;
}

int cmd_train(const ModelFlags& flags, std::ostream& out) {
  const auto ds = load_dataset(flags.manifest);
  RunDefaults run;
  ModelSpec spec = flags.resolve(ds, run);
  const auto tuning = flags.maybe_tune(ds, spec, run, 1);
  const Split split =
      drug_holdout_split(ds, run.fraction, run.val_fraction, spec.options.train.seed);
  FitResult fit = fit_and_predict(ds, spec, split);

  const fs::path dir = flags.out_dir;
  save_snapshot(dir / "snapshot.json", capture_snapshot(spec, split, fit.model.get()));
  write_file_atomic(dir / "history.csv", fit.history.to_csv());
  if (tuning) write_file_atomic(dir / "tuning.csv", tuning->to_csv());
  write_file_atomic(dir / "config.json",
                    config_echo("train", flags.manifest, ds, spec, run, tuning).dump(2) + "\n");

  const ScoredCells cells = collect_test_cells(fit.scores, ds.labels, split);
  out << "model: " << to_string(spec.kind) << "\n";
  out << "epochs: " << fit.history.stopping_epoch << " (best " << fit.history.best_epoch << ")\n";
  try {
    out << "test_roc_auc: " << num(roc_auc(cells.scores, cells.labels)) << "\n";
    out << "test_pr_auc: " << num(pr_auc(cells.scores, cells.labels)) << "\n";
  } catch (const SingleClassError&) {
    out << "test metrics undefined: held-out cells hold a single class\n";
  }
  out << "wrote " << (dir / "snapshot.json").string() << "\n";
  return 0;
}

int cmd_evaluate(const ModelFlags& flags, std::optional<std::size_t> repetitions, std::size_t jobs,
                 std::ostream& out) {
  const auto ds = load_dataset(flags.manifest);
  RunDefaults run;
  ModelSpec spec = flags.resolve(ds, run);
  if (repetitions) run.repetitions = *repetitions;
  if (run.repetitions < 1) throw CLI::ValidationError("--repetitions", "must be >= 1");
  const auto tuning = flags.maybe_tune(ds, spec, run, jobs);
  const EvalReport report = run_experiment(ds, spec, run.fraction, run.repetitions,
                                           spec.options.train.seed, jobs, run.val_fraction);
  const fs::path dir = flags.out_dir;
  write_file_atomic(dir / "report.txt", report.to_text());
  write_file_atomic(dir / "report.csv", report.to_csv());
  if (tuning) write_file_atomic(dir / "tuning.csv", tuning->to_csv());
  write_file_atomic(dir / "config.json",
                    config_echo("evaluate", flags.manifest, ds, spec, run, tuning).dump(2) + "\n");
  out << "roc_auc: " << report.roc_mean << " ± " << report.roc_std << "\n";
  out << "pr_auc: " << report.pr_mean << " ± " << report.pr_std << "\n";
  if (report.failures > 0) out << "failed repetitions: " << report.failures << "\n";
  return report.failures == report.repetitions.size() ? 1 : 0;
}

int cmd_attention(const std::string& snapshot_path, const std::string& manifest, const std::string& out_dir,
                  bool per_node, std::ostream& out) {
  const Snapshot snap = load_snapshot(snapshot_path);
  const auto variant = as_variant(snap.spec.kind);
  if (!variant || !is_attentive(*variant)) {
    throw std::invalid_argument("snapshot model " + to_string(snap.spec.kind) +
                                " is not attentive; attention weights exist only for attsemigae and atttransgae");
  }
  const auto ds = load_dataset(manifest);
  const auto model = restore_model(snap, ds);
  const Matrix weights = model->attention();
  const auto& names = model->problem().view_names;

  std::string csv = "task_id,view_name,mean_weight\n";
  std::string table = "task_id";
  for (const auto& n : names) table += "\t" + n;
  table += "\n" + snap.task_id;
  for (std::size_t u = 0; u < weights.rows(); ++u) {
    double mean = 0.0;
    for (std::size_t i = 0; i < weights.cols(); ++i) mean += weights(u, i);
    mean /= static_cast<double>(weights.cols());
    csv += snap.task_id + "," + names[u] + "," + num(mean) + "\n";
    char cell[32];
    std::snprintf(cell, sizeof cell, "%.3f", mean);
    table += std::string("\t") + cell;
  }
  table += "\n";
  const fs::path dir = out_dir;
  write_file_atomic(dir / "attention.csv", csv);
  write_file_atomic(dir / "attention_table.txt", table);
  if (per_node) {
    std::string detail = "node_id";
    for (const auto& n : names) detail += "," + n;
    detail += "\n";
    for (std::size_t i = 0; i < weights.cols(); ++i) {
      detail += ds.node_ids[i];
      for (std::size_t u = 0; u < weights.rows(); ++u) detail += "," + num(weights(u, i));
      detail += "\n";
    }
    write_file_atomic(dir / "attention_nodes.csv", detail);
  }
  out << table;
  return 0;
}

int cmd_predict(const std::string& snapshot_path, const std::string& manifest, const std::string& out_dir,
                std::ostream& out) {
  const Snapshot snap = load_snapshot(snapshot_path);
  const auto ds = load_dataset(manifest);
  validate_split(snap.split, ds.node_count());
  Matrix scores;
  if (as_variant(snap.spec.kind)) {
    scores = restore_model(snap, ds)->predict();
  } else {
    scores = fit_and_predict(ds, snap.spec, snap.split).scores;
  }
  const ScoredCells cells = collect_test_cells(scores, ds.labels, snap.split);
  const auto roles = node_roles(snap.split);
  std::string csv = "node_a,node_b,type,score,label,held_out\n";
  for (std::size_t k = 0; k < cells.cells.size(); ++k) {
    const auto [i, j, t] = cells.cells[k];
    const std::string type = ds.labels.type_names.empty() ? "link" : ds.labels.type_names[t];
    const bool held = roles[i] == NodeRole::test || roles[j] == NodeRole::test;
    csv += ds.node_ids[i] + "," + ds.node_ids[j] + "," + type + "," + num(cells.scores[k]) + "," +
           num(cells.labels[k]) + "," + (held ? "1" : "0") + "\n";
  }
  write_file_atomic(fs::path(out_dir) / "predictions.csv", csv);
  out << "wrote " << cells.cells.size() << " scored pairs to "
      << (fs::path(out_dir) / "predictions.csv").string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attentive multi-view graph auto-encoders for link prediction"};
  app.require_subcommand(1);

  ModelFlags train_flags;
  auto* train = app.add_subcommand("train", "Train one model on one hold-out split");
  train_flags.add(*train);

  ModelFlags eval_flags;
  std::optional<std::size_t> repetitions;
  std::size_t jobs = 1;
  auto* evaluate = app.add_subcommand("evaluate", "Repeated hold-out evaluation");
  eval_flags.add(*evaluate);
  evaluate->add_option_function<long long>(
      "--repetitions",
      [&](long long v) {
        if (v < 1) throw CLI::ValidationError("--repetitions", "must be >= 1");
        repetitions = static_cast<std::size_t>(v);
      },
      "Number of repetitions");
  evaluate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string snapshot, att_manifest, att_out = ".";
  bool per_node = false;
  auto* attention = app.add_subcommand("attention", "Export per-view attention weights");
  attention->add_option("--snapshot", snapshot)->required();
  attention->add_option("--manifest", att_manifest)->required();
  attention->add_option("--out-dir", att_out);
  attention->add_flag("--per-node", per_node, "Also write per-node weights");

  std::string pred_snapshot, pred_manifest, pred_out = ".";
  auto* predict = app.add_subcommand("predict", "Score pairs with a trained snapshot");
  predict->add_option("--snapshot", pred_snapshot)->required();
  predict->add_option("--manifest", pred_manifest)->required();
  predict->add_option("--out-dir", pred_out);

  SyntheticSpec synth_spec;
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "Generate a planted-community dataset");
  synth->add_option("--n-nodes", synth_spec.n_nodes);
  synth->add_option("--n-views", synth_spec.n_views);
  synth->add_option("--informative-view", synth_spec.informative_view);
  synth->add_option("--noise-level", synth_spec.noise_level);
  synth->add_option("--edge-density", synth_spec.edge_density);
  synth->add_option("--label-dim", synth_spec.label_dim);
  synth->add_option("--seed", synth_spec.seed);
  synth->add_option_function<std::string>(
            "--distractor", [&](const std::string& v) { synth_spec.distractor = parse_distractor(v); },
            "Distractor views: uniform or permuted")
      ->check(CLI::IsMember({"uniform", "permuted"}));
  synth->add_option_function<std::string>(
            "--features", [&](const std::string& v) { synth_spec.features = parse_synth_features(v); },
            "Node features: identity or similarity")
      ->check(CLI::IsMember({"identity", "similarity"}));
  synth->add_option("--out-dir", synth_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (std::string(e.what()).find("--model") != std::string::npos) {
      err << "valid models:";
      for (const auto& m : model_names()) err << " " << m;
      err << "\n";
    }
    return 2;
  }

  try {
    if (*train) return cmd_train(train_flags, out);
    if (*evaluate) return cmd_evaluate(eval_flags, repetitions, jobs, out);
    if (*attention) return cmd_attention(snapshot, att_manifest, att_out, per_node, out);
    if (*predict) return cmd_predict(pred_snapshot, pred_manifest, pred_out, out);
    if (*synth) {
      try {
        synth_spec.validate();
      } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
      }
      out << "wrote " << write_synthetic(synth_spec, synth_out).string() << "\n";
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace mvgae
