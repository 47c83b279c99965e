#include "memlab/memory_arch.hpp"

#include <cmath>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

constexpr double kGeluScale = 0.7978845608028653558798921198687;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec act_vec(Activation act, const Vec& x) {
  Vec y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = activation_eval(act, x[i]);
  return y;
}

Mat uniform_fanin(Rng& rng, int rows, int cols) {
  double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  return rng.uniform_mat(rows, cols, -bound, bound);
}

struct ForwardCache {
  Vec x_in;                 // raw input
  Vec z;                    // input after W0 (or x_in itself)
  std::vector<Vec> block_in;   // input of each residual block
  std::vector<Vec> block_pre;  // W2 x per block (pre-activation)
  Vec gate_pre;             // gated arch: W3 z
  Vec out;
};

int first_block_weight(const MemoryState& m) { return m.input_proj ? 1 : 0; }

Vec forward_cached(const MemoryState& m, const Vec& x, ForwardCache& c) {
  if (static_cast<int>(x.size()) != m.in_dim)
    throw ShapeError("forward: input dim " + std::to_string(x.size()) + " != in_dim " +
                     std::to_string(m.in_dim));
  c.x_in = x;
  if (m.arch == MemoryArch::matrix) {
    c.out = matvec(m.weights[0], x);
    return c.out;
  }
  c.z = m.input_proj ? matvec(m.weights[0], x) : x;
  int w = first_block_weight(m);
  if (m.arch == MemoryArch::gated_mlp) {
    const Mat& w1 = m.weights[w];
    const Mat& w2 = m.weights[w + 1];
    const Mat& w3 = m.weights[w + 2];
    c.block_in = {c.z};
    c.block_pre = {matvec(w2, c.z)};
    c.gate_pre = matvec(w3, c.z);
    Vec h = act_vec(m.act, c.block_pre[0]);
    for (size_t i = 0; i < h.size(); ++i) h[i] *= c.gate_pre[i];
    Vec y = matvec(w1, h);
    axpy(y, 1.0, c.z);
    c.out = y;
    return c.out;
  }
  // mlp2 / stackL: residual blocks x + W1 act(W2 x)
  Vec cur = c.z;
  c.block_in.clear();
  c.block_pre.clear();
  for (int b = 0; b < m.blocks; ++b) {
    const Mat& w1 = m.weights[w + 2 * b];
    const Mat& w2 = m.weights[w + 2 * b + 1];
    c.block_in.push_back(cur);
    Vec pre = matvec(w2, cur);
    c.block_pre.push_back(pre);
    Vec y = matvec(w1, act_vec(m.act, pre));
    axpy(y, 1.0, cur);
    cur = std::move(y);
  }
  c.out = cur;
  return c.out;
}

// Gradients of every weight given dL/d(output). Residual paths contribute the
// identity Jacobian; the gated block uses the product rule on act(W2 z) . W3 z.
GradState backward(const MemoryState& m, const ForwardCache& c, const Vec& dout) {
  GradState g = zero_grads_like(m);
  if (m.arch == MemoryArch::matrix) {
    g.weights[0] = outer(dout, c.x_in);
    return g;
  }
  int w = first_block_weight(m);
  Vec dz;
  if (m.arch == MemoryArch::gated_mlp) {
    const Mat& w1 = m.weights[w];
    const Mat& w2 = m.weights[w + 1];
    const Mat& w3 = m.weights[w + 2];
    const Vec& pre = c.block_pre[0];
    Vec sig(pre.size());
    for (size_t i = 0; i < pre.size(); ++i) sig[i] = activation_eval(m.act, pre[i]);
    Vec h(pre.size());
    for (size_t i = 0; i < pre.size(); ++i) h[i] = sig[i] * c.gate_pre[i];
    g.weights[w] = outer(dout, h);
    Vec dh = matvec_t(w1, dout);
    Vec da(pre.size()), db(pre.size());
    for (size_t i = 0; i < pre.size(); ++i) {
      da[i] = dh[i] * c.gate_pre[i] * activation_deriv(m.act, pre[i]);
      db[i] = dh[i] * sig[i];
    }
    g.weights[w + 1] = outer(da, c.z);
    g.weights[w + 2] = outer(db, c.z);
    dz = dout;
    axpy(dz, 1.0, matvec_t(w2, da));
    axpy(dz, 1.0, matvec_t(w3, db));
  } else {
    Vec delta = dout;
    for (int b = m.blocks - 1; b >= 0; --b) {
      const Mat& w1 = m.weights[w + 2 * b];
      const Mat& w2 = m.weights[w + 2 * b + 1];
      const Vec& pre = c.block_pre[b];
      Vec sig = act_vec(m.act, pre);
      g.weights[w + 2 * b] = outer(delta, sig);
      Vec da(pre.size());
      Vec dh = matvec_t(w1, delta);
      for (size_t i = 0; i < pre.size(); ++i) da[i] = dh[i] * activation_deriv(m.act, pre[i]);
      g.weights[w + 2 * b + 1] = outer(da, c.block_in[b]);
      axpy(delta, 1.0, matvec_t(w2, da));
    }
    dz = std::move(delta);
  }
  if (m.input_proj) g.weights[0] = outer(dz, c.x_in);
  return g;
}

}  // namespace

double activation_eval(Activation act, double x) {
  if (act == Activation::gelu) {
    double u = kGeluScale * (x + kGeluCubic * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
  }
  return x * sigmoid(x);  // silu
}

double activation_deriv(Activation act, double x) {
  if (act == Activation::gelu) {
    double u = kGeluScale * (x + kGeluCubic * x * x * x);
    double t = std::tanh(u);
    double du = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
  }
  double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

GradState zero_grads_like(const MemoryState& m) {
  GradState g;
  g.weights.reserve(m.weights.size());
  for (const Mat& w : m.weights) g.weights.emplace_back(w.rows, w.cols);
  return g;
}

void grads_axpy(GradState& y, double s, const GradState& x) {
  if (y.weights.size() != x.weights.size()) throw ShapeError("grads_axpy: layout mismatch");
  for (size_t i = 0; i < y.weights.size(); ++i) axpy(y.weights[i], s, x.weights[i]);
}

void grads_scale(GradState& g, double s) {
  for (Mat& w : g.weights)
    for (double& v : w.a) v *= s;
}

double grads_max_abs(const GradState& g) {
  double m = 0.0;
  for (const Mat& w : g.weights)
    for (double v : w.a) m = std::max(m, std::fabs(v));
  return m;
}

MemoryState init_memory(MemoryArch arch, const MemoryDims& dims, uint64_t seed, Activation act) {
  if (dims.in_dim < 1 || dims.out_dim < 1) throw ShapeError("init_memory: dims must be >= 1");
  MemoryState m;
  m.arch = arch;
  m.act = act;
  m.in_dim = dims.in_dim;
  m.out_dim = dims.out_dim;
  m.hidden = dims.hidden > 0 ? dims.hidden : 4 * dims.out_dim;
  m.blocks = arch == MemoryArch::stackL ? dims.blocks : 1;
  if (m.blocks < 1) throw ShapeError("init_memory: blocks must be >= 1");

  if (arch == MemoryArch::matrix) {
    m.weights = {Mat::zeros(dims.out_dim, dims.in_dim)};
    return m;
  }

  Rng rng(seed);
  m.input_proj = dims.in_dim != dims.out_dim;
  if (m.input_proj) m.weights.push_back(uniform_fanin(rng, dims.out_dim, dims.in_dim));
  const int n = dims.out_dim;
  if (arch == MemoryArch::gated_mlp) {
    m.weights.push_back(uniform_fanin(rng, n, m.hidden));  // W1
    m.weights.push_back(uniform_fanin(rng, m.hidden, n));  // W2
    m.weights.push_back(uniform_fanin(rng, m.hidden, n));  // W3
  } else {
    for (int b = 0; b < m.blocks; ++b) {
      m.weights.push_back(uniform_fanin(rng, n, m.hidden));
      m.weights.push_back(uniform_fanin(rng, m.hidden, n));
    }
  }
  return m;
}

Vec forward(const MemoryState& m, const Vec& x) {
  ForwardCache c;
  return forward_cached(m, x, c);
}

LossGrad grad_l2(const MemoryState& m, const Vec& phi_k, const Vec& v) {
  if (static_cast<int>(v.size()) != m.out_dim) throw ShapeError("grad_l2: value dim mismatch");
  ForwardCache c;
  Vec f = forward_cached(m, phi_k, c);
  Vec r = f;
  axpy(r, -1.0, v);
  LossGrad out;
  out.loss = dot(r, r);
  Vec dout = r;
  for (double& d : dout) d *= 2.0;
  out.g = backward(m, c, dout);
  return out;
}

LossGrad grad_dot(const MemoryState& m, const Vec& phi_k, const Vec& v) {
  if (static_cast<int>(v.size()) != m.out_dim) throw ShapeError("grad_dot: value dim mismatch");
  ForwardCache c;
  Vec f = forward_cached(m, phi_k, c);
  LossGrad out;
  out.loss = dot(f, v);
  out.g = backward(m, c, v);
  return out;
}

}  // namespace memlab
