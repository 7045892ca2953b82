#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvgae/dataset.hpp"
#include "mvgae/fusion.hpp"
#include "mvgae/matrix.hpp"
#include "mvgae/optim.hpp"
#include "mvgae/tape.hpp"

namespace mvgae {

enum class Variant { mvgcn, semigae, attsemigae, transgae, atttransgae };

Variant parse_variant(const std::string& name);
std::string to_string(Variant variant);
bool is_attentive(Variant variant);
bool is_transductive(Variant variant);

// ---------------------------------------------------------------------------
// Building blocks. The Matrix overloads evaluate the same recorded graph on a
// scratch tape.

enum class EmbeddingActivation { softmax, relu };

/// Z = act(A relu(A X W0) W1), act = row softmax by default.
Var record_mvgcn_embed(Tape& tape, Var x, Var a_hat, Var w0, Var w1,
                       EmbeddingActivation activation = EmbeddingActivation::softmax,
                       double dropout = 0.0, Rng* rng = nullptr);
Matrix mvgcn_embed(const ViewGraph& view, const Matrix& a_hat, const Matrix& w0, const Matrix& w1);
Matrix mvgcn_embed(const Matrix& x, const Matrix& a_hat, const Matrix& w0, const Matrix& w1);

Matrix concat_embeddings(std::span<const Matrix> embeddings);

/// sigmoid(z_i W z_j^T) for 1 x k rows.
double bilinear_link_score(const Matrix& z_i, const Matrix& z_j, const Matrix& w);

/// Z = row_softmax(A X W0).
Var record_gae_encode(Tape& tape, Var x, Var a_hat, Var w0);
Matrix gae_encode(const Matrix& x, const Matrix& a_hat, const Matrix& w0);

/// X' = sigmoid(A Z W1).
Var record_gae_decode(Tape& tape, Var z, Var a_hat, Var w1);
Matrix gae_decode(const Matrix& z, const Matrix& a_hat, const Matrix& w1);

/// sum ||X - X'||^2.
double reconstruction_loss(const Matrix& x, const Matrix& x_prime);

/// Row softmax or entrywise sigmoid of Z W_h + b_h.
Var record_label_head(Tape& tape, Var z, Var w_h, Var b_h, HeadMode mode);
Matrix label_head(const Matrix& z, const Matrix& w_h, const Matrix& b_h, HeadMode mode);

/// Cross-entropy over the cells where `mask` is 1; predictions are floored at
/// 1e-12 before the log. Softmax mode sums -y ln y'; sigmoid mode adds the
/// -(1 - y) ln(1 - y') term.
Var record_supervised_loss(Tape& tape, Var y_pred, const Matrix& y_true, const Matrix& mask,
                           HeadMode mode);
double supervised_loss(const Matrix& y_true, const Matrix& y_pred, HeadMode mode);

double semi_supervised_loss(double l_train, double l_ed, double lambda);

struct TransductiveOutput {
  /// Rows of the non-test nodes, in node order.
  Matrix train;
  /// Rows of the test nodes, in split order.
  Matrix test;
};

/// Places observed rows and latent test rows into node order, runs the
/// auto-encoder over the whole graph, and splits the reconstruction back by
/// node role. `y_observed` holds one row per non-test node, in node order.
TransductiveOutput transductive_forward(const Matrix& y_observed, const Matrix& y_test_latent,
                                        const Split& split, const Matrix& a_hat,
                                        const Matrix& w0, const Matrix& w1);

/// ||Y'_train - Y_train||^2 + ||Y'_test - Y_test||^2 + mu ||Y_test||^2.
double transductive_objective(const Matrix& y_prime_train, const Matrix& y_train,
                              const Matrix& y_prime_test, const Matrix& y_test_latent, double mu);

// ---------------------------------------------------------------------------
// Whole-model training problems.

/// Immutable inputs of one training run: selected views, labels, split, and
/// the cell masks derived from the split.
struct Problem {
  std::vector<std::string> view_names;
  std::vector<Matrix> raw_adjacency;
  std::vector<Matrix> norm_adjacency;
  std::vector<std::optional<Matrix>> features;
  LabelMatrix labels;
  Split split;
  std::vector<NodeRole> roles;
  /// Cells whose row and column nodes are both training nodes.
  Matrix train_mask;
  /// Validation rows against training/validation columns.
  Matrix val_mask;

  std::size_t nodes() const { return roles.size(); }
  std::size_t label_columns() const { return labels.values.cols(); }
};

/// `view_indices` empty selects every view.
std::shared_ptr<const Problem> make_problem(const MultiViewDataset& dataset, const Split& split,
                                            std::span<const std::size_t> view_indices = {});

struct ModelOptions {
  TrainConfig train;
  /// Non-attentive variants fuse with this; attentive variants read only the
  /// logit/symmetrize flags.
  FusionConfig fusion;
  EmbeddingActivation embedding = EmbeddingActivation::softmax;
  /// Use identity features for views without features.
  bool one_hot_missing_features = false;
};

class LinkModel : public Trainable {
 public:
  LinkModel(Variant variant, std::shared_ptr<const Problem> problem, ModelOptions options);

  Variant variant() const { return variant_; }
  const Problem& problem() const { return *problem_; }
  const ModelOptions& options() const { return options_; }
  ModelOptions& mutable_options() { return options_; }

  std::vector<Matrix>& parameters() override { return params_; }
  const std::vector<Matrix>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  std::size_t parameter_index(const std::string& name) const;

  double loss_and_gradients(Rng& dropout_rng, std::vector<Matrix>& grads) override;
  Evaluation validate() override;
  void mark_trained() override { trained_ = true; }
  bool trained() const { return trained_; }

  /// Training objective recorded with the given parameter leaves. With
  /// `dropout_rng` null, dropout is off.
  Var record_objective(Tape& tape, std::span<const Var> params, Rng* dropout_rng) const;

  /// N x M link scores in inference mode.
  Matrix predict() const;

  /// T x N attention weights in inference mode; attentive variants only.
  Matrix attention() const;

 protected:
  struct Graph {
    Var objective;
    Var val_objective;
    Var scores;
    std::optional<Var> attention;
  };

  virtual Graph forward(Tape& tape, std::span<const Var> params, Rng* dropout_rng) const = 0;

  std::size_t add_parameter(std::string name, Matrix value, bool weight);
  /// Adds the per-view attention (w, b) parameters; attentive variants only.
  void add_attention_parameters(Rng& rng);
  /// Fused adjacency: linear fusion for plain variants, attentive otherwise.
  Var fused_adjacency(Tape& tape, std::span<const Var> params, std::optional<Var>& weights) const;
  Var l2_penalty(Tape& tape, Var loss, std::span<const Var> params) const;
  Var dropout(Tape& tape, Var x, Rng* rng) const;
  Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) const;

  Variant variant_;
  std::shared_ptr<const Problem> problem_;
  ModelOptions options_;
  std::vector<Matrix> params_;
  std::vector<std::string> names_;
  std::vector<bool> is_weight_;
  std::size_t attention_offset_ = 0;
  Matrix linear_fused_;
  bool trained_ = false;
};

/// Per-view two-layer GraphCNN embeddings, concatenated, scored bilinearly.
class MvgcnModel : public LinkModel {
 public:
  MvgcnModel(std::shared_ptr<const Problem> problem, ModelOptions options);

 protected:
  Graph forward(Tape& tape, std::span<const Var> params, Rng* dropout_rng) const override;

 private:
  std::vector<Matrix> features_;
};

/// Graph auto-encoder over node features with a supervised label head.
class SemiGaeModel : public LinkModel {
 public:
  SemiGaeModel(std::shared_ptr<const Problem> problem, ModelOptions options, bool attentive);

  const Matrix& features() const { return features_; }

 protected:
  Graph forward(Tape& tape, std::span<const Var> params, Rng* dropout_rng) const override;

 private:
  Matrix features_;
  Matrix val_rows_;
};

/// Graph auto-encoder over the label matrix with the test rows as latent
/// variables.
class TransGaeModel : public LinkModel {
 public:
  TransGaeModel(std::shared_ptr<const Problem> problem, ModelOptions options, bool attentive);

  const Matrix& latent() const { return params_[latent_index_]; }

  /// Re-optimizes only the latent test labels under `mu`, other parameters
  /// frozen, with plain (dropout-free) Adam.
  void refit_latent(double mu, std::size_t iterations, double learning_rate = 0.01);

 protected:
  Graph forward(Tape& tape, std::span<const Var> params, Rng* dropout_rng) const override;

 private:
  Matrix observed_input_;
  std::size_t latent_index_ = 0;
};

std::unique_ptr<LinkModel> make_model(Variant variant, std::shared_ptr<const Problem> problem,
                                      const ModelOptions& options);

/// Identity features for parity experiments with featureless views.
Matrix one_hot_features(std::size_t nodes);

}  // namespace mvgae
