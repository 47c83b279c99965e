#pragma once

#include <span>
#include <vector>

#include "memlab/rules.hpp"

namespace memlab {

/// Chunk-wise evaluation plan. b is the chunk size; every gradient inside a
/// chunk is taken at the memory state frozen at the chunk boundary, so b is a
/// semantic parameter of the computation, not an implementation detail:
/// results depend on it (except for state-independent gradients), and b = 1
/// reproduces the sequential steppers exactly. c is the window length.
struct ChunkPlan {
  int b = 1;
  int c = 1;
};

/// 0/1 banded lower-triangular mask: identity plus the c-1 positions
/// immediately preceding each diagonal entry. Row sums are
/// min(row_index + 1, c); c = 1 gives the identity.
Mat build_window_mask(int b, int c);

/// Closed-form expansion of the momentum recurrence
///   S_t = theta_t S_{t-1} - eta_t u_t
/// for a whole chunk at once:
///   S_t = (prod_{s<=t} theta_s) S_0 - sum_i (prod_{s>i} theta_s) eta_i u_i.
/// The expansion only needs the gradients u, so every S_t is available before
/// any memory update is applied. Returns S_1..S_T.
std::vector<GradState> expand_momentum(std::span<const GradState> u,
                                       std::span<const double> thetas,
                                       std::span<const double> etas, const GradState& s0);

/// Chunked evaluation of the windowed rules (omega, dot, swla). Within each
/// chunk all per-token gradients are evaluated at the chunk-boundary state;
/// window sums are aggregated under the sliding-window mask, with window
/// tails reaching before the chunk evaluated at the same boundary state.
/// Decay and step gates are applied position by position, which realizes the
/// telescoping decay products of the chunked update rule.
SequenceResult chunked_omega(const RuleConfig& cfg, std::span<const Token> stream,
                             const ChunkPlan& plan, const GateSchedule& gates, MemoryState m0);

/// Chunked momentum rule (window length 1): gradients at the boundary state,
/// momentum pre-expanded in closed form, memory updates applied in order.
SequenceResult chunked_titans(const RuleConfig& cfg, std::span<const Token> stream,
                              const ChunkPlan& plan, const GateSchedule& gates, MemoryState m0);

/// Chunked atlas: boundary-state window gradients, closed-form momentum
/// expansion, then Newton-Schulz on every expanded momentum term
/// independently (parallelizable) before the decay-weighted updates.
SequenceResult chunked_atlas(const RuleConfig& cfg, std::span<const Token> stream,
                             const ChunkPlan& plan, const GateSchedule& gates, MemoryState m0);

}  // namespace memlab
