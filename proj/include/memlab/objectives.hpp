#pragma once

#include <span>
#include <vector>

#include "memlab/memory_arch.hpp"

namespace memlab {

enum class LossBase { l2, dot };

/// Sliding-window attentional bias: sum over the last c pairs of
/// gamma_i * loss_base(M; phi_k_i, v_i). Gammas are indexed by offset from
/// the newest token: gammas[c-1] gates the newest pair, gammas[0] the oldest
/// a full window can hold.
struct WindowLoss {
  int c = 1;
  std::vector<double> gammas;  // length c, each in [0, 1]
  LossBase base = LossBase::l2;
};

/// One window entry: lifted key plus value.
struct KvPair {
  Vec phi_k;
  Vec v;
};

/// Windowed loss and gradient. The window is passed oldest-first and may be
/// shorter than c at sequence start; missing positions contribute zero. An
/// empty window yields zero loss and a zero gradient.
LossGrad omega_loss_grad(const MemoryState& m, std::span<const KvPair> window,
                         const WindowLoss& wl);

}  // namespace memlab
