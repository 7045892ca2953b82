#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "mvgae/cli.hpp"
#include "mvgae/experiment.hpp"
#include "mvgae/snapshot.hpp"
#include "mvgae/synth.hpp"

using namespace mvgae;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mvgae");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = mvgae::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool has_partial(const fs::path& dir) {
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".partial") return true;
  return false;
}

// A small synthetic dataset shared by the tests below.
fs::path synth_manifest() {
  static const fs::path manifest = [] {
    const auto dir = testing::scratch_dir("cli_synth");
    const auto r = cli({"synth", "--n-nodes", "24", "--seed", "3", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    return dir / "manifest.json";
  }();
  return manifest;
}

const std::vector<std::string> kQuick{"--hidden-units", "8", "--second-layer-units", "4",
                                      "--max-epochs", "15"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  const auto m = synth_manifest().string();
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  const auto bad = cli({"train", "--manifest", m, "--model", "svm"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("attsemigae") != std::string::npos);
  CHECK(cli({"evaluate", "--manifest", m, "--repetitions", "0"}).code == 2);
  CHECK(cli({"evaluate", "--manifest", m, "--fraction", "1.5"}).code == 2);
  CHECK(cli({"evaluate", "--manifest", m, "--jobs", "0"}).code == 2);
  CHECK(cli({"train", "--manifest", m, "--tune", "lambda"}).code == 2);
  CHECK(cli({"synth", "--noise-level", "2"}).code == 2);
  CHECK(cli({"synth", "--distractor", "loud"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("runtime failures exit with code 1") {
  const auto dir = testing::scratch_dir("cli_missing");
  const auto r = cli({"train", "--manifest", (dir / "nope.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("nope.json") != std::string::npos);
}

TEST_CASE("train, attention and predict write their outputs") {
  const auto m = synth_manifest().string();
  const auto dir = testing::scratch_dir("cli_train");
  const auto r = cli(with({"train", "--manifest", m, "--model", "attsemigae", "--out-dir", dir.string()}, kQuick));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("test_roc_auc") != std::string::npos);
  for (const char* f : {"snapshot.json", "history.csv", "config.json"}) CHECK(fs::exists(dir / f));
  CHECK(slurp(dir / "history.csv").rfind("epoch,train_loss,val_loss,val_metric\n", 0) == 0);
  const auto config = nlohmann::json::parse(slurp(dir / "config.json"));
  CHECK(config["model"] == "attsemigae");
  CHECK(config["train"]["hidden_units"] == 8);

  const auto att = cli({"attention", "--snapshot", (dir / "snapshot.json").string(), "--manifest", m,
                        "--out-dir", dir.string(), "--per-node"});
  REQUIRE(att.code == 0);
  const auto csv = slurp(dir / "attention.csv");
  CHECK(csv.rfind("task_id,view_name,mean_weight\n", 0) == 0);
  CHECK(csv.find(",view2,") != std::string::npos);
  CHECK(fs::exists(dir / "attention_table.txt"));
  CHECK(fs::exists(dir / "attention_nodes.csv"));

  const auto pred = cli({"predict", "--snapshot", (dir / "snapshot.json").string(), "--manifest", m,
                         "--out-dir", dir.string()});
  REQUIRE(pred.code == 0);
  CHECK(slurp(dir / "predictions.csv").rfind("node_a,node_b,type,score,label,held_out\n", 0) == 0);
  CHECK_FALSE(has_partial(dir));
}

TEST_CASE("attention refuses snapshots of non-attentive models") {
  const auto m = synth_manifest().string();
  const auto dir = testing::scratch_dir("cli_nonatt");
  REQUIRE(cli(with({"train", "--manifest", m, "--model", "semigae", "--out-dir", dir.string()}, kQuick)).code == 0);
  const auto r = cli({"attention", "--snapshot", (dir / "snapshot.json").string(), "--manifest", m,
                      "--out-dir", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("not attentive") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "attention.csv"));
}

TEST_CASE("baselines train and predict through the CLI") {
  const auto m = synth_manifest().string();
  for (const char* model : {"nn", "lp"}) {
    const auto dir = testing::scratch_dir(std::string("cli_") + model);
    REQUIRE(cli({"train", "--manifest", m, "--model", model, "--out-dir", dir.string()}).code == 0);
    CHECK(cli({"predict", "--snapshot", (dir / "snapshot.json").string(), "--manifest", m, "--out-dir",
               dir.string()})
              .code == 0);
  }
}

TEST_CASE("evaluate writes a reproducible report") {
  const auto m = synth_manifest().string();
  const auto a = testing::scratch_dir("cli_eval_a");
  const auto b = testing::scratch_dir("cli_eval_b");
  const auto args = with({"evaluate", "--manifest", m, "--model", "mvgcn", "--repetitions", "3"}, kQuick);
  REQUIRE(cli(with(args, {"--out-dir", a.string()})).code == 0);
  REQUIRE(cli(with(args, {"--out-dir", b.string(), "--jobs", "3"})).code == 0);
  CHECK(slurp(a / "report.txt") == slurp(b / "report.txt"));
  CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
  CHECK(nlohmann::json::parse(slurp(a / "config.json"))["repetitions"] == 3);
  CHECK_FALSE(has_partial(a));
}

TEST_CASE("tuning selects a grid point and records the trials") {
  const auto m = synth_manifest().string();
  const auto dir = testing::scratch_dir("cli_tune");
  const auto r = cli(with({"train", "--manifest", m, "--model", "semigae", "--out-dir", dir.string(), "--tune",
                           "lambda=1,0.1", "--tune", "dropout=0.5,0", "--tune-splits", "2"},
                          kQuick));
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "tuning.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const auto config = nlohmann::json::parse(slurp(dir / "config.json"));
  CHECK(config["tuning"]["trials"].size() == 4);
  CHECK(config["tuning"]["splits"] == 2);
  CHECK(config["train"]["lambda"] == config["tuning"]["selected"]["lambda"]);
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string exe = MVGAE_CLI_PATH;
  CHECK(std::system((exe + " --help > /dev/null").c_str()) == 0);
  const int bad = std::system((exe + " train --manifest x --model svm 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == 2);
  const int missing = std::system((exe + " train --manifest /nonexistent/m.json 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(missing) == 1);
}

TEST_CASE("a missing label file is a runtime failure naming the path") {
  const auto dir = testing::scratch_dir("cli_nolabels");
  REQUIRE(cli({"synth", "--n-nodes", "12", "--out-dir", dir.string()}).code == 0);
  fs::remove(dir / "labels.tsv");
  const auto r = cli({"train", "--manifest", (dir / "manifest.json").string(), "--model", "nn"});
  CHECK(r.code == 1);
  CHECK(r.err.find("labels.tsv") != std::string::npos);
}

TEST_CASE("attention tables have one weight per view summing to one") {
  const auto dir = testing::scratch_dir("cli_att4");
  REQUIRE(cli({"synth", "--n-nodes", "24", "--n-views", "4", "--out-dir", (dir / "data").string()}).code == 0);
  const auto m = (dir / "data/manifest.json").string();
  REQUIRE(cli(with({"train", "--manifest", m, "--model", "atttransgae", "--out-dir", dir.string()}, kQuick)).code == 0);
  REQUIRE(cli({"attention", "--snapshot", (dir / "snapshot.json").string(), "--manifest", m, "--out-dir",
               dir.string()})
              .code == 0);
  std::istringstream csv(slurp(dir / "attention.csv"));
  std::string line;
  std::getline(csv, line);
  double total = 0.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    total += std::stod(line.substr(line.rfind(',') + 1));
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("equal attention logits export uniform weights") {
  const auto dir = testing::scratch_dir("cli_att_equal");
  SyntheticSpec s;
  s.n_nodes = 20;
  s.n_views = 4;
  const auto manifest = write_synthetic(s, dir / "data");
  const auto ds = load_dataset(manifest);
  ModelSpec spec;
  spec.kind = ModelKind::attsemigae;
  spec.options.train.max_epochs = 2;
  const Split split = drug_holdout_split(ds, 0.25, 0.1, 0);
  auto fit = fit_and_predict(ds, spec, split);
  for (std::size_t k = 0; k < fit.model->parameters().size(); ++k) {
    const auto& name = fit.model->parameter_names()[k];
    auto& p = fit.model->parameters()[k];
    if (name.rfind("attention_w/", 0) == 0) p = Matrix(p.rows(), p.cols(), 0.0);
    if (name.rfind("attention_b/", 0) == 0) p = Matrix(p.rows(), p.cols(), 0.7);
  }
  save_snapshot(dir / "snapshot.json", capture_snapshot(spec, split, fit.model.get()));
  REQUIRE(cli({"attention", "--snapshot", (dir / "snapshot.json").string(), "--manifest", manifest.string(),
               "--out-dir", dir.string()})
              .code == 0);
  CHECK(slurp(dir / "attention_table.txt").find("0.250\t0.250\t0.250\t0.250") != std::string::npos);
}

TEST_CASE("evaluate reports one row per repetition") {
  const auto m = synth_manifest().string();
  const auto dir = testing::scratch_dir("cli_rows");
  REQUIRE(cli({"evaluate", "--manifest", m, "--model", "nn", "--repetitions", "50", "--out-dir", dir.string()})
              .code == 0);
  const auto csv = slurp(dir / "report.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  CHECK(slurp(dir / "report.txt").find("±") != std::string::npos);
}
