#pragma once

#include <cstdint>
#include <vector>

#include "memlab/linalg.hpp"

namespace memlab {

enum class MemoryArch { matrix, mlp2, gated_mlp, stackL };
enum class Activation { gelu, silu };

struct MemoryDims {
  int in_dim = 0;
  int out_dim = 0;
  int hidden = 0;  // 0 selects 4 * out_dim
  int blocks = 1;  // residual blocks, stackL only
};

/// Parameters of one memory module M(.). Weight layout by architecture:
///   matrix:    [W]                        M(x) = W x
///   mlp2:      [W1, W2]                   M(x) = x + W1 act(W2 x)
///   gated_mlp: [W1, W2, W3]               M(x) = x + W1 (act(W2 x) . W3 x)
///   stackL:    blocks x [W1_l, W2_l]      composition of mlp2 blocks
/// Deep architectures require in_dim == out_dim for the residual path. When a
/// feature map inflates keys past out_dim, a leading non-residual projection
/// W0: in_dim -> out_dim is prepended (input_proj = true) and the blocks run
/// at out_dim.
struct MemoryState {
  MemoryArch arch = MemoryArch::matrix;
  Activation act = Activation::gelu;
  int in_dim = 0;
  int out_dim = 0;
  int hidden = 0;
  int blocks = 1;
  bool input_proj = false;
  std::vector<Mat> weights;
};

/// Per-weight gradients (or momentum), shape-congruent with a MemoryState.
struct GradState {
  std::vector<Mat> weights;
};

GradState zero_grads_like(const MemoryState& m);
void grads_axpy(GradState& y, double s, const GradState& x);
void grads_scale(GradState& g, double s);
double grads_max_abs(const GradState& g);

/// Matrix memory starts at zero so an empty memory retrieves zero; MLP
/// weights draw from uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) with the
/// library generator, so equal seeds give identical states.
MemoryState init_memory(MemoryArch arch, const MemoryDims& dims, uint64_t seed,
                        Activation act = Activation::gelu);

Vec forward(const MemoryState& m, const Vec& x);

struct LossGrad {
  double loss = 0.0;
  GradState g;
};

/// loss = ||M(phi_k) - v||_2^2 with analytic gradients for every weight.
LossGrad grad_l2(const MemoryState& m, const Vec& phi_k, const Vec& v);

/// loss = <M(phi_k), v> with analytic gradients; for the matrix architecture
/// the gradient is the outer product v phi_k^T.
LossGrad grad_dot(const MemoryState& m, const Vec& phi_k, const Vec& v);

// Activation scalars, exposed for reference oracles. GELU is the tanh
// approximation 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))) with exactly
// these constants so independent evaluations are bit-for-bit reproducible.
double activation_eval(Activation act, double x);
double activation_deriv(Activation act, double x);

}  // namespace memlab
