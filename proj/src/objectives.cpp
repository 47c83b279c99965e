#include "memlab/objectives.hpp"

namespace memlab {

LossGrad omega_loss_grad(const MemoryState& m, std::span<const KvPair> window,
                         const WindowLoss& wl) {
  if (wl.c < 1) throw ShapeError("omega_loss_grad: window length c must be >= 1");
  if (static_cast<int>(wl.gammas.size()) != wl.c)
    throw ShapeError("omega_loss_grad: need exactly c gammas");
  if (static_cast<int>(window.size()) > wl.c)
    throw ShapeError("omega_loss_grad: window longer than c");

  LossGrad total;
  total.g = zero_grads_like(m);
  const int w = static_cast<int>(window.size());
  for (int j = 0; j < w; ++j) {
    double gamma = wl.gammas[wl.c - w + j];  // newest pair takes index c-1
    if (gamma == 0.0) continue;
    LossGrad lg = wl.base == LossBase::l2 ? grad_l2(m, window[j].phi_k, window[j].v)
                                          : grad_dot(m, window[j].phi_k, window[j].v);
    total.loss += gamma * lg.loss;
    grads_axpy(total.g, gamma, lg.g);
  }
  return total;
}

}  // namespace memlab
