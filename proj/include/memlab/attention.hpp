#pragma once

#include <optional>

#include "memlab/linalg.hpp"

namespace memlab {

/// One attention call: L rows of queries/keys/values. When scale is set,
/// logits are q.k / sqrt(d); the unnormalized oracle never scales.
struct AttnBatch {
  Mat q;  // L x d
  Mat k;  // L x d
  Mat v;  // L x d_v
  bool scale = true;
};

/// Causal softmax attention with max-subtraction for stability.
Mat softmax_attention(const AttnBatch& batch);

/// Softmax attention restricted to the last c positions, j in [i-c+1, i].
Mat sliding_window_attention(const AttnBatch& batch, int c);

/// y_t = sum_{i<=t} v_i exp(q_t . k_i), no normalizer and no logit scaling.
/// Callers should keep ||q||, ||k|| <= 1; there is no normalizer to absorb
/// large logits.
Mat unnormalized_exp_attention(const AttnBatch& batch);

}  // namespace memlab
