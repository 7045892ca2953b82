#include "mvgae/optim.hpp"

#include <charconv>
#include <cmath>

namespace mvgae {

HeadMode parse_head_mode(const std::string& name) {
  if (name == "softmax") return HeadMode::softmax;
  if (name == "sigmoid") return HeadMode::sigmoid;
  throw std::invalid_argument("unknown head mode '" + name + "' (softmax | sigmoid)");
}

std::string to_string(HeadMode mode) { return mode == HeadMode::softmax ? "softmax" : "sigmoid"; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw std::invalid_argument("l2 must be >= 0");
  if (early_stop_window < 1) throw std::invalid_argument("early_stop_window must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (hidden_units < 1 || second_layer_units < 1) throw std::invalid_argument("hidden units must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
}

void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state,
               const AdamOptions& options) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: parameter and gradient counts differ");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix(p.rows(), p.cols()));
      state.v.push_back(Matrix(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: stale optimizer state");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(options.beta1, t);
  const double correct2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(params[k], grads[k], "adam_step");
    auto p = params[k].data();
    auto g = grads[k].data();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g[i];
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      p[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
    }
  }
}

Var apply_l2(Tape& tape, Var loss, std::span<const Var> weights, double coeff) {
  if (!(coeff >= 0.0)) throw std::invalid_argument("apply_l2: coefficient must be >= 0");
  if (coeff == 0.0 || weights.empty()) return loss;
  Var total = loss;
  for (Var w : weights) total = tape.add(total, tape.affine(tape.sum(tape.square(w)), coeff, 0.0));
  return total;
}

TrainingDiverged::TrainingDiverged(std::size_t epoch, const std::string& what)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + what),
      epoch_(epoch) {}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,val_metric\n";
  char buf[32];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
  };
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + ",";
    put(e.train_loss);
    out += ",";
    put(e.val_loss);
    out += ",";
    if (std::isnan(e.val_metric)) {
      out += "nan";
    } else {
      put(e.val_metric);
    }
    out += "\n";
  }
  return out;
}

TrainHistory train(Trainable& model, const TrainConfig& config) {
  config.validate();
  Rng dropout_rng = Rng(config.seed).derive(0xd209);
  AdamState state;
  const AdamOptions adam{.learning_rate = config.learning_rate};
  std::vector<Matrix>& params = model.parameters();
  std::vector<Matrix> best = params;
  std::vector<Matrix> grads;

  TrainHistory history;
  double best_score = 0.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double loss = model.loss_and_gradients(dropout_rng, grads);
    if (!std::isfinite(loss)) throw TrainingDiverged(epoch, "non-finite training loss");
    adam_step(params, grads, state, adam);
    const Evaluation eval = model.validate();
    if (!std::isfinite(eval.loss)) throw TrainingDiverged(epoch, "non-finite validation loss");
    history.epochs.push_back({epoch, loss, eval.loss, eval.metric});

    // Lower is better for both criteria once AUC is negated.
    double score = eval.loss;
    if (config.stop_on == StopCriterion::validation_auc) {
      score = std::isnan(eval.metric) ? eval.loss : -eval.metric;
    }
    if (epoch == 1 || score < best_score) {
      best_score = score;
      history.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (++since_best >= config.early_stop_window) {
      history.stopping_epoch = epoch;
      break;
    }
    history.stopping_epoch = epoch;
  }
  params = best;
  model.mark_trained();
  return history;
}

}  // namespace mvgae
