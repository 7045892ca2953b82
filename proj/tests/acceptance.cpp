// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "helpers.hpp"
#include "mvgae/baselines.hpp"
#include "mvgae/cli.hpp"
#include "mvgae/experiment.hpp"
#include "mvgae/fusion.hpp"
#include "mvgae/gradcheck.hpp"
#include "mvgae/graph.hpp"
#include "mvgae/metrics.hpp"
#include "mvgae/models.hpp"
#include "mvgae/synth.hpp"
#include "mvgae/tuning.hpp"
#include "model_checks.hpp"
#include "oracles.hpp"

using namespace mvgae;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

constexpr double kFraction = 0.25;
constexpr double kValFraction = 0.10;
constexpr std::size_t kReps = 50;
constexpr std::size_t kTuneSplits = 3;

// Every learned model is configured the same way: a small grid over dropout
// and its regularization weight, scored on validation drugs only.
TuningGrid grid_for(ModelKind kind) {
  const bool trans = kind == ModelKind::transgae || kind == ModelKind::atttransgae;
  return {{"dropout", {0.5, 0.0}}, {trans ? "mu" : "lambda", trans ? std::vector<double>{0.01, 0.1, 1.0}
                                                                   : std::vector<double>{1.0, 0.1, 0.01}}};
}

struct SuiteResult {
  EvalReport report;
  std::string selected;
  double seconds = 0.0;
};

const MultiViewDataset& planted_suite() {
  static const MultiViewDataset ds = [] {
    SyntheticSpec s;
    s.n_nodes = 120;
    s.n_views = 3;
    s.informative_view = 0;
    s.noise_level = 0.2;
    s.seed = 1;
    return generate_synthetic(s);
  }();
  return ds;
}

SuiteResult run_suite(ModelKind kind, std::vector<std::string> views = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto& ds = planted_suite();
  ModelSpec spec;
  spec.kind = kind;
  spec.views = std::move(views);
  SuiteResult out;
  if (as_variant(kind)) {
    const auto tuned =
        tune_on_validation(ds, spec, grid_for(kind), kFraction, kValFraction, kTuneSplits, 0, worker_count());
    spec = tuned.best;
    out.selected = tuned.best_overrides.dump();
  }
  out.report = run_experiment(ds, spec, kFraction, kReps, 0, worker_count(), kValFraction);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

const SuiteResult& attsemigae_suite() {
  static const SuiteResult r = run_suite(ModelKind::attsemigae);
  return r;
}

Outcome gradient_correctness() {
  Rng rng(2024);
  const auto ds = testing::random_dataset(20, 3, rng);
  const auto problem = make_problem(ds, drug_holdout_split(ds, 0.25, 0.2, 5));
  Outcome o{true, ""};
  for (auto head : {HeadMode::sigmoid, HeadMode::softmax}) {
    o.detail += to_string(head) + " head: ";
    for (auto v : {Variant::mvgcn, Variant::semigae, Variant::attsemigae, Variant::transgae,
                   Variant::atttransgae}) {
      ModelOptions opts;
      opts.train.hidden_units = 8;
      opts.train.second_layer_units = 4;
      opts.train.head_mode = head;
      auto model = make_model(v, problem, opts);
      // Move biases and latent rows off their zero initialization.
      for (auto& p : model->parameters())
        for (double& x : p.data()) x += rng.uniform(-0.3, 0.3);
      const double eps = testing::gradcheck_step(*model);
      const auto r = testing::check_model_gradients(*model);
      o.pass = o.pass && r.max_relative_error < 1e-4;
      o.detail += fmt("%s %.1e (eps %.1e); ", to_string(v).c_str(), r.max_relative_error, eps);
    }
  }
  return o;
}

Outcome oracle_equivalence() {
  Rng rng(77);
  std::size_t roc_mismatch = 0;
  double pr_worst = 0.0;
  for (std::size_t k = 0; k < 200; ++k) {
    const auto inst = testing::random_ranking(rng, k);
    if (roc_auc(inst.scores, inst.labels) != testing::brute_roc(inst.scores, inst.labels)) ++roc_mismatch;
    pr_worst = std::max(pr_worst, std::abs(pr_auc(inst.scores, inst.labels) -
                                           testing::brute_pr(inst.scores, inst.labels)));
  }
  return {roc_mismatch == 0 && pr_worst <= 1e-12,
          fmt("200 instances: ROC mismatches %zu, worst PR deviation %.1e", roc_mismatch, pr_worst)};
}

Outcome fusion_equivalence() {
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Matrix> views;
    for (int u = 0; u < 3; ++u) views.push_back(normalize_adjacency(testing::random_symmetric(30, rng)));
    const std::vector<Matrix> weights(3, Matrix(1, 30, 1.0 / 3.0));
    worst = std::max(worst, max_abs_diff(attentive_fuse(views, weights), linear_fuse(views)));
  }
  return {worst <= 1e-12, fmt("20 random 3-view 30-node inputs: max deviation %.1e", worst)};
}

Outcome lp_closed_form() {
  Rng rng(5);
  double worst = 0.0;
  for (double alpha : {0.5, 0.9, 0.99}) {
    for (std::size_t n : {5, 20, 50}) {
      const Matrix a = normalize_adjacency(testing::random_symmetric(n, rng));
      Matrix y0(n, n);
      for (double& v : y0.data()) v = rng.uniform() < 0.2 ? 1.0 : 0.0;
      LpConfig cfg;
      cfg.alpha = alpha;
      cfg.tolerance = 1e-10;
      cfg.max_iters = 100000;
      worst = std::max(worst, max_abs_diff(label_propagation(a, y0, cfg), testing::lp_closed_form(a, y0, alpha)));
    }
  }
  return {worst < 1e-6, fmt("alpha {0.5, 0.9, 0.99} x N {5, 20, 50}: max deviation %.1e", worst)};
}

Outcome planted_signal_recovery() {
  const auto& att = attsemigae_suite();
  std::size_t argmax_hits = 0;
  for (const auto& rep : att.report.repetitions) {
    if (rep.failed || rep.attention.empty()) continue;
    if (std::max_element(rep.attention.begin(), rep.attention.end()) == rep.attention.begin()) ++argmax_hits;
  }
  ModelSpec constant;
  constant.kind = ModelKind::constant;
  const auto flat = run_experiment(planted_suite(), constant, kFraction, kReps, 0, worker_count(), kValFraction);
  const bool pass = att.report.failures == 0 && att.report.roc_mean >= 0.85 && argmax_hits >= 45 &&
                    std::abs(flat.roc_mean - 0.5) <= 0.02 && att.seconds < 600.0;
  return {pass, fmt("attsemigae ROC %.3f +- %.3f (selected %s), informative view on top in %zu/50, "
                    "constant ROC %.3f, attsemigae time %.0fs",
                    att.report.roc_mean, att.report.roc_std, att.selected.c_str(), argmax_hits,
                    flat.roc_mean, att.seconds)};
}

Outcome ranking_fidelity() {
  const auto& att_semi = attsemigae_suite();
  const auto semi = run_suite(ModelKind::semigae, {"view0"});
  const auto att_trans = run_suite(ModelKind::atttransgae);
  const auto trans = run_suite(ModelKind::transgae, {"view0"});
  const auto nn = run_suite(ModelKind::nn);
  auto line = [](const char* name, const SuiteResult& r) {
    return fmt("%s %.3f +- %.3f", name, r.report.roc_mean, r.report.roc_std);
  };
  const bool semi_pair = att_semi.report.roc_mean >= semi.report.roc_mean;
  const bool trans_pair = att_trans.report.roc_mean >= trans.report.roc_mean;
  const bool over_nn = semi.report.roc_mean >= nn.report.roc_mean && trans.report.roc_mean >= nn.report.roc_mean;
  return {semi_pair && trans_pair && over_nn,
          line("attsemigae", att_semi) + " vs " + line("semigae[view0]", semi) + " (" +
              (semi_pair ? "ok" : "violated") + "); " + line("atttransgae", att_trans) + " vs " +
              line("transgae[view0]", trans) + " (" + (trans_pair ? "ok" : "violated") + "); " +
              line("nn", nn) + " (" + (over_nn ? "ok" : "violated") + ")"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mvgae");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
  const fs::path dir = testing::scratch_dir("acceptance_determinism");
  SyntheticSpec s;
  s.n_nodes = 48;
  s.seed = 8;
  const std::string manifest = write_synthetic(s, dir / "data").string();
  auto evaluate = [&](const std::string& tag, const std::string& jobs) {
    return cli({"evaluate", "--manifest", manifest, "--model", "attsemigae", "--repetitions", "8", "--jobs",
                jobs, "--out-dir", (dir / tag).string()});
  };
  if (evaluate("a", "1") != 0 || evaluate("b", "1") != 0 || evaluate("c", "8") != 0)
    return {false, "evaluate exited with an error"};
  const bool repeat = slurp(dir / "a/report.txt") == slurp(dir / "b/report.txt") &&
                      slurp(dir / "a/report.csv") == slurp(dir / "b/report.csv");
  const bool threads = slurp(dir / "a/report.txt") == slurp(dir / "c/report.txt") &&
                       slurp(dir / "a/report.csv") == slurp(dir / "c/report.csv");
  return {repeat && threads, fmt("repeat runs byte-identical: %s; --jobs 1 vs 8 identical: %s",
                                 repeat ? "yes" : "no", threads ? "yes" : "no")};
}

Outcome normalization_invariants() {
  Rng rng(99);
  double worst_radius = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + rng.below(59);
    Matrix m = testing::random_symmetric(n, rng);
    // Half the matrices are sparse, some with isolated nodes.
    if (k % 2 == 1)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
          if (rng.uniform() < 0.7) m(i, j) = m(j, i) = 0.0;
    worst_radius = std::max(worst_radius, testing::spectral_radius(normalize_adjacency(m)));
  }

  double worst_sum = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t t = 2 + rng.below(4), n = 1 + rng.below(40);
    std::vector<Matrix> logits;
    for (std::size_t u = 0; u < t; ++u) logits.push_back(testing::random_matrix(1, n, rng, -50.0, 50.0));
    const auto w = attention_weights(logits);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& g : w) s += g(0, i);
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
  }
  // Weights of trained attentive models.
  const auto& ds = planted_suite();
  const Split split = drug_holdout_split(ds, kFraction, kValFraction, 0);
  for (auto kind : {ModelKind::attsemigae, ModelKind::atttransgae}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.options.train.max_epochs = 50;
    const Matrix w = fit_and_predict(ds, spec, split).model->attention();
    for (std::size_t i = 0; i < w.cols(); ++i) {
      double s = 0.0;
      for (std::size_t u = 0; u < w.rows(); ++u) s += w(u, i);
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
  }
  return {worst_radius <= 1.0 + 1e-9 && worst_sum <= 1e-12,
          fmt("max spectral radius %.12f over 100 matrices; max |sum of attention - 1| %.1e", worst_radius,
              worst_sum)};
}

Outcome transductive_sanity() {
  SyntheticSpec s;
  s.n_nodes = 30;
  s.n_views = 1;
  s.noise_level = 0.2;
  s.seed = 1;
  const auto ds = generate_synthetic(s);
  ModelSpec spec;
  spec.kind = ModelKind::transgae;
  const auto report = run_experiment(ds, spec, 0.2, 20, 0, worker_count(), kValFraction);

  const Split split = drug_holdout_split(ds, 0.2, kValFraction, 0);
  auto fit = fit_and_predict(ds, spec, split);
  auto& trans = static_cast<TransGaeModel&>(*fit.model);
  const std::size_t idx = trans.parameter_index("y_test_latent");
  const Matrix start = trans.latent();
  std::vector<double> norms;
  for (double mu : {0.01, 0.1, 1.0, 10.0}) {
    trans.parameters()[idx] = start;
    trans.refit_latent(mu, 2000);
    norms.push_back(std::sqrt(trans.latent().squared_norm()));
  }
  bool monotone = true;
  for (std::size_t k = 1; k < norms.size(); ++k) monotone = monotone && norms[k] < norms[k - 1];
  return {report.failures == 0 && report.roc_mean >= 0.65 && monotone,
          fmt("transgae ROC %.3f +- %.3f over 20 splits; latent norm at mu 0.01/0.1/1/10: %.4g %.4g %.4g %.4g",
              report.roc_mean, report.roc_std, norms[0], norms[1], norms[2], norms[3])};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"oracle equivalence", oracle_equivalence},
      {"fusion equivalence", fusion_equivalence},
      {"label propagation closed form", lp_closed_form},
      {"planted-signal recovery", planted_signal_recovery},
      {"ranking fidelity", ranking_fidelity},
      {"determinism", determinism},
      {"normalization invariants", normalization_invariants},
      {"transductive sanity", transductive_sanity},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!only.empty() && !only.contains(k + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << "criterion " << k + 1 << " (" << criteria[k].first << "): " << (o.pass ? "PASS" : "FAIL")
              << " [" << fmt("%.1fs", secs) << "] " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
