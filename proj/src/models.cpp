#include "mvgae/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mvgae/graph.hpp"
#include "mvgae/metrics.hpp"

namespace mvgae {

Variant parse_variant(const std::string& name) {
  if (name == "mvgcn") return Variant::mvgcn;
  if (name == "semigae") return Variant::semigae;
  if (name == "attsemigae") return Variant::attsemigae;
  if (name == "transgae") return Variant::transgae;
  if (name == "atttransgae") return Variant::atttransgae;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::mvgcn: return "mvgcn";
    case Variant::semigae: return "semigae";
    case Variant::attsemigae: return "attsemigae";
    case Variant::transgae: return "transgae";
    case Variant::atttransgae: return "atttransgae";
  }
  return "?";
}

bool is_attentive(Variant variant) {
  return variant == Variant::attsemigae || variant == Variant::atttransgae;
}

bool is_transductive(Variant variant) {
  return variant == Variant::transgae || variant == Variant::atttransgae;
}

// ---------------------------------------------------------------------------

namespace {

Var apply_dropout(Tape& tape, Var x, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  const Matrix& v = tape.value(x);
  Matrix mask(v.rows(), v.cols());
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = rng->uniform() < rate ? 0.0 : keep;
  return tape.multiply(x, tape.constant(std::move(mask)));
}

Var masked_squared_error(Tape& tape, Var pred, const Matrix& target, const Matrix& mask) {
  Var diff = tape.multiply(tape.subtract(pred, tape.constant(target)), tape.constant(mask));
  return tape.sum(tape.square(diff));
}

Matrix full_mask(const Matrix& like) { return Matrix(like.rows(), like.cols(), 1.0); }

}  // namespace

Var record_mvgcn_embed(Tape& tape, Var x, Var a_hat, Var w0, Var w1,
                       EmbeddingActivation activation, double dropout, Rng* rng) {
  Var xd = apply_dropout(tape, x, dropout, rng);
  Var hidden = tape.relu(tape.matmul(a_hat, tape.matmul(xd, w0)));
  Var hd = apply_dropout(tape, hidden, dropout, rng);
  Var pre = tape.matmul(a_hat, tape.matmul(hd, w1));
  return activation == EmbeddingActivation::softmax ? tape.row_softmax(pre) : tape.relu(pre);
}

Matrix mvgcn_embed(const Matrix& x, const Matrix& a_hat, const Matrix& w0, const Matrix& w1) {
  Tape tape;
  return tape.value(record_mvgcn_embed(tape, tape.constant(x), tape.constant(a_hat),
                                       tape.constant(w0), tape.constant(w1)));
}

Matrix mvgcn_embed(const ViewGraph& view, const Matrix& a_hat, const Matrix& w0, const Matrix& w1) {
  if (!view.features) {
    throw std::invalid_argument("mvgcn_embed: view '" + view.name + "' has no node features");
  }
  return mvgcn_embed(*view.features, a_hat, w0, w1);
}

Matrix concat_embeddings(std::span<const Matrix> embeddings) { return concat_cols(embeddings); }

double bilinear_link_score(const Matrix& z_i, const Matrix& z_j, const Matrix& w) {
  return sigmoid(matmul(matmul(z_i, w), z_j.transpose()).item());
}

Var record_gae_encode(Tape& tape, Var x, Var a_hat, Var w0) {
  return tape.row_softmax(tape.matmul(a_hat, tape.matmul(x, w0)));
}

Matrix gae_encode(const Matrix& x, const Matrix& a_hat, const Matrix& w0) {
  Tape tape;
  return tape.value(
      record_gae_encode(tape, tape.constant(x), tape.constant(a_hat), tape.constant(w0)));
}

Var record_gae_decode(Tape& tape, Var z, Var a_hat, Var w1) {
  return tape.sigmoid(tape.matmul(a_hat, tape.matmul(z, w1)));
}

Matrix gae_decode(const Matrix& z, const Matrix& a_hat, const Matrix& w1) {
  Tape tape;
  return tape.value(
      record_gae_decode(tape, tape.constant(z), tape.constant(a_hat), tape.constant(w1)));
}

double reconstruction_loss(const Matrix& x, const Matrix& x_prime) {
  return (x - x_prime).squared_norm();
}

Var record_label_head(Tape& tape, Var z, Var w_h, Var b_h, HeadMode mode) {
  Var logits = tape.add_row(tape.matmul(z, w_h), b_h);
  return mode == HeadMode::softmax ? tape.row_softmax(logits) : tape.sigmoid(logits);
}

Matrix label_head(const Matrix& z, const Matrix& w_h, const Matrix& b_h, HeadMode mode) {
  Tape tape;
  return tape.value(record_label_head(tape, tape.constant(z), tape.constant(w_h),
                                      tape.constant(b_h), mode));
}

Var record_supervised_loss(Tape& tape, Var y_pred, const Matrix& y_true, const Matrix& mask,
                           HeadMode mode) {
  require_same_shape(tape.value(y_pred), y_true, "supervised_loss");
  require_same_shape(y_true, mask, "supervised_loss mask");
  Var positive = tape.sum(tape.multiply(tape.log_clamped(y_pred), tape.constant(hadamard(mask, y_true))));
  Var total = positive;
  if (mode == HeadMode::sigmoid) {
    Matrix negative_weight = mask;
    for (std::size_t k = 0; k < negative_weight.size(); ++k)
      negative_weight.data()[k] *= 1.0 - y_true.data()[k];
    Var negative = tape.sum(tape.multiply(tape.log_clamped(tape.affine(y_pred, -1.0, 1.0)),
                                          tape.constant(std::move(negative_weight))));
    total = tape.add(positive, negative);
  }
  return tape.affine(total, -1.0, 0.0);
}

double supervised_loss(const Matrix& y_true, const Matrix& y_pred, HeadMode mode) {
  Tape tape;
  return tape.value(record_supervised_loss(tape, tape.constant(y_pred), y_true, full_mask(y_true), mode))
      .item();
}

double semi_supervised_loss(double l_train, double l_ed, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("semi_supervised_loss: lambda must be >= 0");
  return l_train + lambda * l_ed;
}

namespace {

std::vector<std::size_t> non_test_nodes(const Split& split) {
  std::vector<std::size_t> rows;
  const auto roles = node_roles(split);
  for (std::size_t i = 0; i < roles.size(); ++i)
    if (roles[i] != NodeRole::test) rows.push_back(i);
  return rows;
}

}  // namespace

TransductiveOutput transductive_forward(const Matrix& y_observed, const Matrix& y_test_latent,
                                        const Split& split, const Matrix& a_hat,
                                        const Matrix& w0, const Matrix& w1) {
  const std::size_t n = split.node_count();
  validate_split(split, n);
  const auto known = non_test_nodes(split);
  if (y_observed.rows() != known.size() || y_test_latent.rows() != split.test.size() ||
      y_observed.cols() != y_test_latent.cols()) {
    throw std::invalid_argument("transductive_forward: row blocks " + y_observed.shape_string() +
                                " and " + y_test_latent.shape_string() + " do not match the split");
  }
  Tape tape;
  Var input = tape.add(tape.place_rows(tape.constant(y_observed), known, n),
                       tape.place_rows(tape.constant(y_test_latent), split.test, n));
  Var a = tape.constant(a_hat);
  Var z = record_gae_encode(tape, input, a, tape.constant(w0));
  const Matrix& out = tape.value(record_gae_decode(tape, z, a, tape.constant(w1)));
  return {take_rows(out, known), take_rows(out, split.test)};
}

double transductive_objective(const Matrix& y_prime_train, const Matrix& y_train,
                              const Matrix& y_prime_test, const Matrix& y_test_latent, double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("transductive_objective: mu must be >= 0");
  return (y_prime_train - y_train).squared_norm() + (y_prime_test - y_test_latent).squared_norm() +
         mu * y_test_latent.squared_norm();
}

// ---------------------------------------------------------------------------

std::shared_ptr<const Problem> make_problem(const MultiViewDataset& dataset, const Split& split,
                                            std::span<const std::size_t> view_indices) {
  validate_split(split, dataset.node_count());
  auto problem = std::make_shared<Problem>();
  std::vector<std::size_t> selected(view_indices.begin(), view_indices.end());
  if (selected.empty()) {
    for (std::size_t u = 0; u < dataset.views.size(); ++u) selected.push_back(u);
  }
  for (auto u : selected) {
    const auto& view = dataset.views.at(u);
    problem->view_names.push_back(view.name);
    problem->raw_adjacency.push_back(view.similarity);
    problem->norm_adjacency.push_back(normalize_adjacency(view.similarity));
    problem->features.push_back(view.features);
  }
  problem->labels = dataset.labels;
  problem->split = split;
  problem->roles = node_roles(split);
  problem->train_mask = cell_mask(problem->labels, problem->roles, {NodeRole::train}, {NodeRole::train});
  problem->val_mask = cell_mask(problem->labels, problem->roles, {NodeRole::val},
                                {NodeRole::train, NodeRole::val});
  return problem;
}

Matrix one_hot_features(std::size_t nodes) { return Matrix::identity(nodes); }

LinkModel::LinkModel(Variant variant, std::shared_ptr<const Problem> problem, ModelOptions options)
    : variant_(variant), problem_(std::move(problem)), options_(std::move(options)) {
  options_.train.validate();
  if (problem_->split.train.empty()) throw std::invalid_argument("model: split has no training nodes");
  if (!is_attentive(variant_) && variant_ != Variant::mvgcn) {
    linear_fused_ = linear_fuse(problem_->norm_adjacency, options_.fusion);
  }
}

std::size_t LinkModel::parameter_index(const std::string& name) const {
  for (std::size_t k = 0; k < names_.size(); ++k)
    if (names_[k] == name) return k;
  throw std::invalid_argument("no parameter named '" + name + "'");
}

std::size_t LinkModel::add_parameter(std::string name, Matrix value, bool weight) {
  names_.push_back(std::move(name));
  params_.push_back(std::move(value));
  is_weight_.push_back(weight);
  return params_.size() - 1;
}

void LinkModel::add_attention_parameters(Rng& rng) {
  const auto att = init_attention(problem_->norm_adjacency.size(), problem_->nodes(), rng);
  attention_offset_ = params_.size();
  for (std::size_t u = 0; u < att.views(); ++u) {
    add_parameter("attention_w/" + problem_->view_names[u], att.w[u], true);
    add_parameter("attention_b/" + problem_->view_names[u], att.b[u], false);
  }
}

Var LinkModel::fused_adjacency(Tape& tape, std::span<const Var> params,
                               std::optional<Var>& weights) const {
  if (!is_attentive(variant_)) return tape.constant(linear_fused_);
  const std::size_t t = problem_->norm_adjacency.size();
  std::vector<Var> views, logit_inputs, w, b;
  for (std::size_t u = 0; u < t; ++u) {
    views.push_back(tape.constant(problem_->norm_adjacency[u]));
    logit_inputs.push_back(options_.fusion.logits_from_normalized
                               ? views.back()
                               : tape.constant(problem_->raw_adjacency[u]));
    w.push_back(params[attention_offset_ + 2 * u]);
    b.push_back(params[attention_offset_ + 2 * u + 1]);
  }
  auto fused = record_attentive_fuse(tape, logit_inputs, views, w, b, options_.fusion.symmetrize);
  weights = fused.weights;
  return fused.fused;
}

Var LinkModel::l2_penalty(Tape& tape, Var loss, std::span<const Var> params) const {
  std::vector<Var> weights;
  for (std::size_t k = 0; k < params.size(); ++k)
    if (is_weight_[k]) weights.push_back(params[k]);
  return apply_l2(tape, loss, weights, options_.train.l2);
}

Var LinkModel::dropout(Tape& tape, Var x, Rng* rng) const {
  return apply_dropout(tape, x, options_.train.dropout, rng);
}

Matrix LinkModel::glorot(std::size_t rows, std::size_t cols, Rng& rng) const {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(-s, s);
  return m;
}

Var LinkModel::record_objective(Tape& tape, std::span<const Var> params, Rng* dropout_rng) const {
  return forward(tape, params, dropout_rng).objective;
}

double LinkModel::loss_and_gradients(Rng& dropout_rng, std::vector<Matrix>& grads) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : params_) vars.push_back(tape.parameter(p));
  Var loss = forward(tape, vars, &dropout_rng).objective;
  grads = tape.backward(loss);
  return tape.value(loss).item();
}

Evaluation LinkModel::validate() {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : params_) vars.push_back(tape.constant(p));
  const Graph g = forward(tape, vars, nullptr);
  Evaluation eval;
  if (problem_->split.val.empty()) {
    eval.loss = tape.value(g.objective).item();
    eval.metric = std::numeric_limits<double>::quiet_NaN();
    return eval;
  }
  eval.loss = tape.value(g.val_objective).item();
  std::vector<double> scores, labels;
  const Matrix& s = tape.value(g.scores);
  const auto mask = problem_->val_mask.data();
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k] == 0.0) continue;
    scores.push_back(s.data()[k]);
    labels.push_back(problem_->labels.values.data()[k]);
  }
  try {
    eval.metric = roc_auc(scores, labels);
  } catch (const SingleClassError&) {
    eval.metric = std::numeric_limits<double>::quiet_NaN();
  }
  return eval;
}

Matrix LinkModel::predict() const {
  if (!trained_) throw std::logic_error("predict: model has not been trained");
  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : params_) vars.push_back(tape.constant(p));
  return tape.value(forward(tape, vars, nullptr).scores);
}

Matrix LinkModel::attention() const {
  if (!is_attentive(variant_)) {
    throw std::invalid_argument("attention: variant " + to_string(variant_) + " is not attentive");
  }
  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : params_) vars.push_back(tape.constant(p));
  return tape.value(*forward(tape, vars, nullptr).attention);
}

// ---------------------------------------------------------------------------

namespace {

Matrix resolve_features(const Problem& problem, std::size_t u, bool one_hot) {
  if (problem.features[u]) return *problem.features[u];
  if (one_hot) return one_hot_features(problem.nodes());
  throw std::invalid_argument("view '" + problem.view_names[u] +
                              "' has no node features; use transgae/atttransgae for "
                              "featureless views");
}

}  // namespace

MvgcnModel::MvgcnModel(std::shared_ptr<const Problem> problem, ModelOptions options)
    : LinkModel(Variant::mvgcn, std::move(problem), std::move(options)) {
  Rng rng = Rng(options_.train.seed).derive(0x11);
  const std::size_t h1 = options_.train.hidden_units;
  const std::size_t h2 = options_.train.second_layer_units;
  const std::size_t t = problem_->norm_adjacency.size();
  for (std::size_t u = 0; u < t; ++u) {
    features_.push_back(resolve_features(*problem_, u, options_.one_hot_missing_features));
    add_parameter("w0/" + problem_->view_names[u], glorot(features_[u].cols(), h1, rng), true);
    add_parameter("w1/" + problem_->view_names[u], glorot(h1, h2, rng), true);
  }
  for (std::size_t l = 0; l < problem_->labels.types; ++l)
    add_parameter("bilinear/" + std::to_string(l), glorot(t * h2, t * h2, rng), true);
}

LinkModel::Graph MvgcnModel::forward(Tape& tape, std::span<const Var> params, Rng* rng) const {
  const std::size_t t = problem_->norm_adjacency.size();
  std::vector<Var> embeddings;
  for (std::size_t u = 0; u < t; ++u) {
    embeddings.push_back(record_mvgcn_embed(
        tape, tape.constant(features_[u]), tape.constant(problem_->norm_adjacency[u]),
        params[2 * u], params[2 * u + 1], options_.embedding, options_.train.dropout, rng));
  }
  Var z = tape.concat_cols(embeddings);
  Var zt = tape.transpose(z);
  std::vector<Var> blocks;
  for (std::size_t l = 0; l < problem_->labels.types; ++l)
    blocks.push_back(tape.matmul(tape.matmul(z, params[2 * t + l]), zt));
  Var scores = tape.sigmoid(blocks.size() == 1 ? blocks[0] : tape.concat_cols(blocks));

  const auto& y = problem_->labels.values;
  Graph g;
  g.scores = scores;
  g.objective = l2_penalty(
      tape, record_supervised_loss(tape, scores, y, problem_->train_mask, HeadMode::sigmoid), params);
  g.val_objective = record_supervised_loss(tape, scores, y, problem_->val_mask, HeadMode::sigmoid);
  return g;
}

SemiGaeModel::SemiGaeModel(std::shared_ptr<const Problem> problem, ModelOptions options,
                           bool attentive)
    : LinkModel(attentive ? Variant::attsemigae : Variant::semigae, std::move(problem),
                std::move(options)) {
  std::vector<Matrix> parts;
  for (std::size_t u = 0; u < problem_->features.size(); ++u) {
    if (problem_->features[u]) parts.push_back(*problem_->features[u]);
  }
  if (parts.empty()) {
    if (!options_.one_hot_missing_features) {
      throw std::invalid_argument(
          "semigae needs node features on at least one view; use transgae/atttransgae for "
          "featureless views");
    }
    parts.push_back(one_hot_features(problem_->nodes()));
  }
  features_ = concat_cols(parts);
  val_rows_ = Matrix(features_.rows(), features_.cols());
  for (auto i : problem_->split.val)
    for (double& v : val_rows_.row(i)) v = 1.0;

  Rng rng = Rng(options_.train.seed).derive(0x22);
  if (attentive) add_attention_parameters(rng);
  const std::size_t d = features_.cols();
  const std::size_t h = options_.train.hidden_units;
  const std::size_t m = problem_->label_columns();
  add_parameter("w0", glorot(d, h, rng), true);
  add_parameter("w1", glorot(h, d, rng), true);
  add_parameter("head_w", glorot(h, m, rng), true);
  add_parameter("head_b", Matrix(1, m), false);
}

LinkModel::Graph SemiGaeModel::forward(Tape& tape, std::span<const Var> params, Rng* rng) const {
  const std::size_t base = is_attentive(variant_) ? 2 * problem_->norm_adjacency.size() : 0;
  std::optional<Var> weights;
  Var a = fused_adjacency(tape, params, weights);
  Var x = tape.constant(features_);
  Var z = record_gae_encode(tape, dropout(tape, x, rng), a, params[base]);
  Var zd = dropout(tape, z, rng);
  Var x_prime = record_gae_decode(tape, zd, a, params[base + 1]);
  Var head = record_label_head(tape, zd, params[base + 2], params[base + 3], options_.train.head_mode);

  const auto& y = problem_->labels.values;
  const double lambda = options_.train.lambda;
  Var l_ed = tape.sum(tape.square(tape.subtract(x, x_prime)));
  Var l_train = record_supervised_loss(tape, head, y, problem_->train_mask, options_.train.head_mode);

  Graph g;
  g.scores = head;
  g.attention = weights;
  g.objective = l2_penalty(tape, tape.add(l_train, tape.affine(l_ed, lambda, 0.0)), params);
  Var l_val = record_supervised_loss(tape, head, y, problem_->val_mask, options_.train.head_mode);
  g.val_objective = tape.add(
      l_val, tape.affine(masked_squared_error(tape, x_prime, features_, val_rows_), lambda, 0.0));
  return g;
}

TransGaeModel::TransGaeModel(std::shared_ptr<const Problem> problem, ModelOptions options,
                             bool attentive)
    : LinkModel(attentive ? Variant::atttransgae : Variant::transgae, std::move(problem),
                std::move(options)) {
  if (problem_->split.test.empty()) throw std::invalid_argument("transgae: split has no test nodes");
  observed_input_ = hadamard(problem_->labels.values, problem_->train_mask);

  Rng rng = Rng(options_.train.seed).derive(0x33);
  if (attentive) add_attention_parameters(rng);
  const std::size_t m = problem_->label_columns();
  const std::size_t h = options_.train.hidden_units;
  add_parameter("w0", glorot(m, h, rng), true);
  add_parameter("w1", glorot(h, m, rng), true);
  latent_index_ = add_parameter("y_test_latent", Matrix(problem_->split.test.size(), m), false);
}

LinkModel::Graph TransGaeModel::forward(Tape& tape, std::span<const Var> params, Rng* rng) const {
  const std::size_t base = is_attentive(variant_) ? 2 * problem_->norm_adjacency.size() : 0;
  const auto& test = problem_->split.test;
  std::optional<Var> weights;
  Var a = fused_adjacency(tape, params, weights);
  Var latent = params[latent_index_];
  Var input = tape.add(tape.constant(observed_input_),
                       tape.place_rows(latent, test, problem_->nodes()));
  Var z = record_gae_encode(tape, dropout(tape, input, rng), a, params[base]);
  Var y_prime = record_gae_decode(tape, dropout(tape, z, rng), a, params[base + 1]);

  const auto& y = problem_->labels.values;
  Var train_term = masked_squared_error(tape, y_prime, y, problem_->train_mask);
  Var test_term = tape.sum(tape.square(tape.subtract(tape.take_rows(y_prime, test), latent)));
  Var shrink = tape.affine(tape.sum(tape.square(latent)), options_.train.mu, 0.0);

  Graph g;
  g.scores = y_prime;
  g.attention = weights;
  g.objective = l2_penalty(tape, tape.add(tape.add(train_term, test_term), shrink), params);
  g.val_objective = masked_squared_error(tape, y_prime, y, problem_->val_mask);
  return g;
}

void TransGaeModel::refit_latent(double mu, std::size_t iterations, double learning_rate) {
  if (!(mu >= 0.0)) throw std::invalid_argument("refit_latent: mu must be >= 0");
  options_.train.mu = mu;
  AdamState state;
  const AdamOptions adam{.learning_rate = learning_rate};
  for (std::size_t it = 0; it < iterations; ++it) {
    Tape tape;
    std::vector<Var> vars;
    for (std::size_t k = 0; k < params_.size(); ++k)
      vars.push_back(k == latent_index_ ? tape.parameter(params_[k]) : tape.constant(params_[k]));
    Var loss = forward(tape, vars, nullptr).objective;
    auto grads = tape.backward(loss);
    adam_step(std::span<Matrix>(&params_[latent_index_], 1), grads, state, adam);
  }
}

std::unique_ptr<LinkModel> make_model(Variant variant, std::shared_ptr<const Problem> problem,
                                      const ModelOptions& options) {
  switch (variant) {
    case Variant::mvgcn: return std::make_unique<MvgcnModel>(std::move(problem), options);
    case Variant::semigae: return std::make_unique<SemiGaeModel>(std::move(problem), options, false);
    case Variant::attsemigae: return std::make_unique<SemiGaeModel>(std::move(problem), options, true);
    case Variant::transgae: return std::make_unique<TransGaeModel>(std::move(problem), options, false);
    case Variant::atttransgae:
      return std::make_unique<TransGaeModel>(std::move(problem), options, true);
  }
  throw std::invalid_argument("make_model: unknown variant");
}

}  // namespace mvgae
