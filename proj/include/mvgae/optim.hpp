#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvgae/matrix.hpp"
#include "mvgae/rng.hpp"
#include "mvgae/tape.hpp"

namespace mvgae {

enum class HeadMode { softmax, sigmoid };
enum class StopCriterion { validation_loss, validation_auc };

HeadMode parse_head_mode(const std::string& name);
std::string to_string(HeadMode mode);

struct TrainConfig {
  double learning_rate = 0.01;
  double dropout = 0.5;
  double l2 = 5e-4;
  std::size_t hidden_units = 64;
  std::size_t second_layer_units = 32;
  std::size_t early_stop_window = 30;
  std::size_t max_epochs = 1000;
  double lambda = 1.0;
  double mu = 0.01;
  std::uint64_t seed = 0;
  HeadMode head_mode = HeadMode::sigmoid;
  StopCriterion stop_on = StopCriterion::validation_loss;

  void validate() const;
};

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update of every parameter in place.
void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state,
               const AdamOptions& options = {});

/// loss + coeff * sum ||W||^2 over `weights`.
Var apply_l2(Tape& tape, Var loss, std::span<const Var> weights, double coeff);

struct Evaluation {
  double loss = 0.0;
  /// Validation ROC-AUC, NaN when undefined.
  double metric = 0.0;
};

/// A model the training loop can drive.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual std::vector<Matrix>& parameters() = 0;
  /// Training-mode loss and its gradients at the current parameters.
  virtual double loss_and_gradients(Rng& dropout_rng, std::vector<Matrix>& grads) = 0;
  /// Inference-mode objective on the validation rows.
  virtual Evaluation validate() = 0;
  virtual void mark_trained() {}
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t stopping_epoch = 0;
  std::size_t best_epoch = 0;

  std::string to_csv() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& what);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Adam with early stopping: halts once `early_stop_window` consecutive
/// epochs fail to improve the validation criterion, or at max_epochs, and
/// leaves the model holding the parameters of the best epoch.
TrainHistory train(Trainable& model, const TrainConfig& config);

}  // namespace mvgae
