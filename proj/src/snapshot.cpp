#include "mvgae/snapshot.hpp"

#include <fstream>
#include <stdexcept>

namespace mvgae {

namespace fs = std::filesystem;
using nlohmann::json;

json train_config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"dropout", c.dropout},
              {"l2", c.l2},
              {"hidden_units", c.hidden_units},
              {"second_layer_units", c.second_layer_units},
              {"early_stop_window", c.early_stop_window},
              {"max_epochs", c.max_epochs},
              {"lambda", c.lambda},
              {"mu", c.mu},
              {"seed", c.seed},
              {"head_mode", to_string(c.head_mode)},
              {"stop_on", c.stop_on == StopCriterion::validation_auc ? "auc" : "loss"}};
}

void apply_train_config(TrainConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "dropout") c.dropout = value.get<double>();
    else if (key == "l2") c.l2 = value.get<double>();
    else if (key == "hidden_units") c.hidden_units = value.get<std::size_t>();
    else if (key == "second_layer_units") c.second_layer_units = value.get<std::size_t>();
    else if (key == "early_stop_window") c.early_stop_window = value.get<std::size_t>();
    else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
    else if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "mu") c.mu = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "head_mode") c.head_mode = parse_head_mode(value.get<std::string>());
    else if (key == "stop_on") {
      const auto s = value.get<std::string>();
      if (s != "loss" && s != "auc") throw std::invalid_argument("stop_on must be loss or auc");
      c.stop_on = s == "auc" ? StopCriterion::validation_auc : StopCriterion::validation_loss;
    } else {
      throw std::invalid_argument("unknown train config key '" + key + "'");
    }
  }
}

json to_json(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

json to_json(const Snapshot& s) {
  const auto& o = s.spec.options;
  json params = json::array();
  for (std::size_t k = 0; k < s.params.size(); ++k) {
    json entry = to_json(s.params[k]);
    entry["name"] = s.param_names[k];
    params.push_back(std::move(entry));
  }
  return json{
      {"format", "mvgae-snapshot"},
      {"version", s.version},
      {"model", to_string(s.spec.kind)},
      {"task_id", s.task_id},
      {"views", s.spec.views},
      {"train", train_config_to_json(o.train)},
      {"fusion",
       {{"logits_from_normalized", o.fusion.logits_from_normalized},
        {"renormalize", o.fusion.renormalize},
        {"symmetrize", o.fusion.symmetrize},
        {"alphas", o.fusion.alphas},
        {"mode", o.fusion.mode == FusionMode::fixed_weights ? "fixed_weights" : "uniform"}}},
      {"embedding", o.embedding == EmbeddingActivation::relu ? "relu" : "softmax"},
      {"one_hot_missing_features", o.one_hot_missing_features},
      {"lp", {{"alpha", s.spec.lp.alpha}, {"max_iters", s.spec.lp.max_iters}, {"tolerance", s.spec.lp.tolerance}}},
      {"split",
       {{"train", s.split.train},
        {"val", s.split.val},
        {"test", s.split.test},
        {"fraction", s.split.fraction},
        {"val_fraction", s.split.val_fraction},
        {"seed", s.split.seed}}},
      {"params", std::move(params)}};
}

Snapshot snapshot_from_json(const json& j) {
  if (j.value("format", std::string()) != "mvgae-snapshot") {
    throw std::invalid_argument("not an mvgae snapshot");
  }
  Snapshot s;
  s.version = j.at("version").get<int>();
  if (s.version != kSnapshotVersion) {
    throw std::invalid_argument("unsupported snapshot version " + std::to_string(s.version));
  }
  s.spec.kind = parse_model_kind(j.at("model").get<std::string>());
  s.task_id = j.value("task_id", std::string("all"));
  s.spec.views = j.at("views").get<std::vector<std::string>>();
  apply_train_config(s.spec.options.train, j.at("train"));
  const auto& f = j.at("fusion");
  s.spec.options.fusion.logits_from_normalized = f.at("logits_from_normalized").get<bool>();
  s.spec.options.fusion.renormalize = f.at("renormalize").get<bool>();
  s.spec.options.fusion.symmetrize = f.at("symmetrize").get<bool>();
  s.spec.options.fusion.alphas = f.at("alphas").get<std::vector<double>>();
  s.spec.options.fusion.mode =
      f.at("mode").get<std::string>() == "fixed_weights" ? FusionMode::fixed_weights : FusionMode::uniform;
  s.spec.options.embedding =
      j.at("embedding").get<std::string>() == "relu" ? EmbeddingActivation::relu : EmbeddingActivation::softmax;
  s.spec.options.one_hot_missing_features = j.at("one_hot_missing_features").get<bool>();
  s.spec.lp.alpha = j.at("lp").at("alpha").get<double>();
  s.spec.lp.max_iters = j.at("lp").at("max_iters").get<std::size_t>();
  s.spec.lp.tolerance = j.at("lp").at("tolerance").get<double>();
  const auto& sp = j.at("split");
  s.split.train = sp.at("train").get<std::vector<std::size_t>>();
  s.split.val = sp.at("val").get<std::vector<std::size_t>>();
  s.split.test = sp.at("test").get<std::vector<std::size_t>>();
  s.split.fraction = sp.at("fraction").get<double>();
  s.split.val_fraction = sp.at("val_fraction").get<double>();
  s.split.seed = sp.at("seed").get<std::uint64_t>();
  for (const auto& p : j.at("params")) {
    s.param_names.push_back(p.at("name").get<std::string>());
    s.params.push_back(matrix_from_json(p));
  }
  return s;
}

Snapshot capture_snapshot(const ModelSpec& spec, const Split& split, const LinkModel* model) {
  Snapshot s;
  s.spec = spec;
  s.split = split;
  if (model != nullptr) {
    s.param_names = model->parameter_names();
    s.params = model->parameters();
  }
  return s;
}

std::unique_ptr<LinkModel> restore_model(const Snapshot& s, const MultiViewDataset& dataset) {
  const auto variant = as_variant(s.spec.kind);
  if (!variant) throw std::invalid_argument("snapshot model " + to_string(s.spec.kind) + " has no parameters");
  validate_split(s.split, dataset.node_count());
  auto problem = make_problem(dataset, s.split, resolve_views(dataset, s.spec.views));
  auto model = make_model(*variant, problem, s.spec.options);
  if (model->parameter_names() != s.param_names) {
    throw std::invalid_argument("snapshot parameters do not match the dataset's model layout");
  }
  for (std::size_t k = 0; k < s.params.size(); ++k) {
    const Matrix& want = model->parameters()[k];
    if (want.rows() != s.params[k].rows() || want.cols() != s.params[k].cols()) {
      throw std::invalid_argument("snapshot parameter '" + s.param_names[k] + "' has shape " +
                                  s.params[k].shape_string() + ", expected " + want.shape_string());
    }
  }
  model->parameters() = s.params;
  model->mark_trained();
  return model;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + partial.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + partial.string());
  }
  fs::rename(partial, path);
}

void save_snapshot(const fs::path& path, const Snapshot& snapshot) {
  write_file_atomic(path, to_json(snapshot).dump(1) + "\n");
}

Snapshot load_snapshot(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot " + path.string());
  try {
    return snapshot_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace mvgae
