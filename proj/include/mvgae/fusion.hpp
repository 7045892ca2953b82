#pragma once

#include <span>
#include <vector>

#include "mvgae/matrix.hpp"
#include "mvgae/rng.hpp"
#include "mvgae/tape.hpp"

namespace mvgae {

enum class FusionMode { uniform, fixed_weights, attentive };

struct FusionConfig {
  FusionMode mode = FusionMode::uniform;
  /// Mixing weights for fixed_weights mode, one per view.
  std::vector<double> alphas;
  /// Attention logits read the normalized matrices; false uses the raw ones.
  bool logits_from_normalized = true;
  /// Re-normalize the fused matrix (linear modes only).
  bool renormalize = false;
  /// Replace the attentive fusion A by (A + A^T) / 2.
  bool symmetrize = false;
};

/// One (w, b) pair of 1 x N rows per view.
struct AttentionParams {
  std::vector<Matrix> w;
  std::vector<Matrix> b;

  std::size_t views() const { return w.size(); }
};

/// w ~ U(-s, s) with s = sqrt(6 / (N + N)), b = 0.
AttentionParams init_attention(std::size_t views, std::size_t nodes, Rng& rng);

/// (1/T) sum_u alpha_u A_u; uniform mode uses alpha_u = 1.
Matrix linear_fuse(std::span<const Matrix> views, const FusionConfig& config = {});

/// g'_u = w_u A_u + b_u, one 1 x N row per view.
std::vector<Matrix> attention_logits(std::span<const Matrix> views, const AttentionParams& params);

/// Softmax across views at each node position.
std::vector<Matrix> attention_weights(std::span<const Matrix> logits);

/// sum_u diag(g_u) A_u.
Matrix attentive_fuse(std::span<const Matrix> views, std::span<const Matrix> weights);

/// Per-view mean of the attention weights over node positions.
std::vector<double> mean_attention(std::span<const Matrix> weights);

struct AttentiveFusion {
  Var fused;
  /// T x N; row u holds g_u.
  Var weights;
};

/// Differentiable attentive fusion. `logit_inputs` are the matrices the
/// logits read; `views` are the matrices being mixed.
AttentiveFusion record_attentive_fuse(Tape& tape, std::span<const Var> logit_inputs,
                                      std::span<const Var> views, std::span<const Var> w,
                                      std::span<const Var> b, bool symmetrize = false);

}  // namespace mvgae
