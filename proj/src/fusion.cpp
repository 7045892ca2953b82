#include "mvgae/fusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mvgae/graph.hpp"

namespace mvgae {

namespace {

void require_views(std::span<const Matrix> views) {
  if (views.empty()) throw std::invalid_argument("fusion: no views");
  for (const auto& v : views) {
    if (!v.is_square() || v.rows() != views[0].rows()) {
      throw std::invalid_argument("fusion: view shapes differ (" + views[0].shape_string() +
                                  " vs " + v.shape_string() + ")");
    }
  }
}

}  // namespace

AttentionParams init_attention(std::size_t views, std::size_t nodes, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(nodes + nodes));
  AttentionParams p;
  for (std::size_t u = 0; u < views; ++u) {
    Matrix w(1, nodes);
    for (double& x : w.data()) x = rng.uniform(-s, s);
    p.w.push_back(std::move(w));
    p.b.push_back(Matrix(1, nodes));
  }
  return p;
}

Matrix linear_fuse(std::span<const Matrix> views, const FusionConfig& config) {
  require_views(views);
  const std::size_t t = views.size();
  std::vector<double> alphas(t, 1.0);
  if (config.mode == FusionMode::fixed_weights) {
    if (config.alphas.size() != t) {
      throw std::invalid_argument("linear_fuse: " + std::to_string(config.alphas.size()) +
                                  " weights for " + std::to_string(t) + " views");
    }
    for (double a : config.alphas)
      if (!(a >= 0.0)) throw std::invalid_argument("linear_fuse: weights must be nonnegative");
    alphas = config.alphas;
  } else if (config.mode == FusionMode::attentive) {
    throw std::invalid_argument("linear_fuse: attentive mode needs attention weights");
  }
  Matrix fused(views[0].rows(), views[0].cols());
  for (std::size_t u = 0; u < t; ++u) {
    auto out = fused.data();
    auto in = views[u].data();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += alphas[u] * in[k];
  }
  fused *= 1.0 / static_cast<double>(t);
  if (config.renormalize) fused = normalize_adjacency(fused);
  return fused;
}

std::vector<Matrix> attention_logits(std::span<const Matrix> views, const AttentionParams& params) {
  require_views(views);
  if (params.w.size() != views.size() || params.b.size() != views.size()) {
    throw std::invalid_argument("attention_logits: parameter count does not match view count");
  }
  std::vector<Matrix> logits;
  for (std::size_t u = 0; u < views.size(); ++u) {
    if (params.b[u].rows() != 1 || params.b[u].cols() != views[u].rows()) {
      throw std::invalid_argument("attention_logits: bias shape " + params.b[u].shape_string());
    }
    logits.push_back(matmul(params.w[u], views[u]) + params.b[u]);
  }
  return logits;
}

std::vector<Matrix> attention_weights(std::span<const Matrix> logits) {
  if (logits.empty()) throw std::invalid_argument("attention_weights: no views");
  const Matrix stacked = col_softmax(concat_rows(logits));
  std::vector<Matrix> weights;
  for (std::size_t u = 0; u < logits.size(); ++u) {
    const std::size_t row[] = {u};
    weights.push_back(take_rows(stacked, row));
  }
  return weights;
}

Matrix attentive_fuse(std::span<const Matrix> views, std::span<const Matrix> weights) {
  require_views(views);
  if (weights.size() != views.size()) {
    throw std::invalid_argument("attentive_fuse: weight count does not match view count");
  }
  const std::size_t n = views[0].rows();
  Matrix fused(n, n);
  for (std::size_t u = 0; u < views.size(); ++u) {
    if (weights[u].rows() != 1 || weights[u].cols() != n) {
      throw std::invalid_argument("attentive_fuse: weight shape " + weights[u].shape_string());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double g = weights[u](0, i);
      auto dst = fused.row(i);
      auto src = views[u].row(i);
      for (std::size_t j = 0; j < n; ++j) dst[j] += g * src[j];
    }
  }
  return fused;
}

std::vector<double> mean_attention(std::span<const Matrix> weights) {
  std::vector<double> means;
  for (const auto& g : weights) means.push_back(g.sum() / static_cast<double>(g.size()));
  return means;
}

AttentiveFusion record_attentive_fuse(Tape& tape, std::span<const Var> logit_inputs,
                                      std::span<const Var> views, std::span<const Var> w,
                                      std::span<const Var> b, bool symmetrize) {
  const std::size_t t = views.size();
  if (t == 0 || logit_inputs.size() != t || w.size() != t || b.size() != t) {
    throw std::invalid_argument("record_attentive_fuse: inconsistent view counts");
  }
  std::vector<Var> logits;
  for (std::size_t u = 0; u < t; ++u)
    logits.push_back(tape.add(tape.matmul(w[u], logit_inputs[u]), b[u]));
  Var weights = tape.col_softmax(tape.concat_rows(logits));
  Var fused{};
  for (std::size_t u = 0; u < t; ++u) {
    Var term = tape.scale_rows(tape.take_rows(weights, {u}), views[u]);
    fused = u == 0 ? term : tape.add(fused, term);
  }
  if (symmetrize) fused = tape.affine(tape.add(fused, tape.transpose(fused)), 0.5, 0.0);
  return {fused, weights};
}

}  // namespace mvgae
