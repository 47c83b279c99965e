#include "memlab/chunk_engine.hpp"

#include <algorithm>
#include <cmath>

namespace memlab {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

struct LiftedStream {
  std::vector<Vec> phi_k;
  std::vector<Vec> v;
  std::vector<Vec> phi_q;
  std::vector<StepGates> gates;
};

LiftedStream lift_stream(const RuleConfig& cfg, std::span<const Token> stream,
                         const GateSchedule& gates) {
  LiftedStream ls;
  ls.phi_k.reserve(stream.size());
  for (size_t t = 0; t < stream.size(); ++t) {
    ls.phi_k.push_back(apply_poly(cfg.map, stream[t].k));
    ls.v.push_back(stream[t].v);
    ls.phi_q.push_back(apply_poly(cfg.map, stream[t].q));
    StepGates g = gates.at(static_cast<int>(t), stream[t].k);
    validate_gates(g);
    ls.gates.push_back(std::move(g));
  }
  return ls;
}

/// Per-token raw losses and gradients at the frozen boundary state for
/// positions [lo, hi), all against the same memory.
std::vector<LossGrad> boundary_grads(const MemoryState& bound, const LiftedStream& ls, int lo,
                                     int hi, LossBase base) {
  std::vector<LossGrad> u;
  u.reserve(hi - lo);
  for (int i = lo; i < hi; ++i)
    u.push_back(base == LossBase::l2 ? grad_l2(bound, ls.phi_k[i], ls.v[i])
                                     : grad_dot(bound, ls.phi_k[i], ls.v[i]));
  return u;
}

/// Window sum G_n = sum_i gamma_n[offset] u_i over i in (n-c, n]. In-chunk
/// pairs go through the mask; tail indices before the chunk are the window
/// positions carried over the boundary.
LossGrad window_sum(const MemoryState& shape_like, const std::vector<LossGrad>& u, int u_base,
                    const LiftedStream& ls, int n, int chunk_start, int c, const Mat& mask) {
  LossGrad g;
  g.g = zero_grads_like(shape_like);
  const std::vector<double>& gammas = ls.gates[n].gammas;
  int lo = std::max(0, n - c + 1);
  for (int i = lo; i < chunk_start; ++i) {
    double gm = gammas[c - 1 - (n - i)];
    g.loss += gm * u[i - u_base].loss;
    grads_axpy(g.g, gm, u[i - u_base].g);
  }
  for (int i = std::max(lo, chunk_start); i <= n; ++i) {
    double in_window = mask(n - chunk_start, i - chunk_start);
    if (in_window == 0.0) continue;
    double gm = in_window * gammas[c - 1 - (n - i)];
    g.loss += gm * u[i - u_base].loss;
    grads_axpy(g.g, gm, u[i - u_base].g);
  }
  return g;
}

void decay_add(MemoryState& m, double alpha, double s, const GradState& g) {
  for (size_t i = 0; i < m.weights.size(); ++i)
    for (size_t j = 0; j < m.weights[i].a.size(); ++j)
      m.weights[i].a[j] = alpha * m.weights[i].a[j] + s * g.weights[i].a[j];
}

}  // namespace

Mat build_window_mask(int b, int c) {
  require(b >= 1 && c >= 1, "build_window_mask: need b >= 1 and c >= 1");
  Mat m(b, b);
  for (int i = 0; i < b; ++i)
    for (int j = std::max(0, i - c + 1); j <= i; ++j) m(i, j) = 1.0;
  return m;
}

std::vector<GradState> expand_momentum(std::span<const GradState> u,
                                       std::span<const double> thetas,
                                       std::span<const double> etas, const GradState& s0) {
  const int n = static_cast<int>(u.size());
  require(static_cast<int>(thetas.size()) == n && static_cast<int>(etas.size()) == n,
          "expand_momentum: schedule lengths must match gradient count");
  std::vector<GradState> s;
  s.reserve(n);
  double prefix = 1.0;
  std::vector<double> suffix(n);
  for (int t = 0; t < n; ++t) {
    prefix *= thetas[t];
    // suffix[i] = prod_{s=i+1..t} theta_s
    suffix[t] = 1.0;
    for (int i = t - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * thetas[i + 1];
    GradState st = s0;
    grads_scale(st, prefix);
    for (int i = 0; i <= t; ++i) grads_axpy(st, -(suffix[i] * etas[i]), u[i]);
    s.push_back(std::move(st));
  }
  return s;
}

SequenceResult chunked_omega(const RuleConfig& cfg, std::span<const Token> stream,
                             const ChunkPlan& plan, const GateSchedule& gates, MemoryState m0) {
  require(plan.b >= 1, "chunked_omega: chunk size must be >= 1");
  require(plan.c == cfg.window_c, "chunked_omega: plan.c must match cfg.window_c");
  require(cfg.kind == RuleKind::omega || cfg.kind == RuleKind::dot || cfg.kind == RuleKind::swla,
          "chunked_omega: windowed rules only");
  const LossBase base = rule_base(cfg.kind);
  const int L = static_cast<int>(stream.size());
  const int c = plan.c;
  LiftedStream ls = lift_stream(cfg, stream, gates);
  Mat mask = build_window_mask(plan.b, c);

  SequenceResult res;
  res.final_state = init_rule_state(cfg, std::move(m0));
  MemoryState& mem = res.final_state.memory;

  for (int t0 = 0; t0 < L; t0 += plan.b) {
    const int t1 = std::min(t0 + plan.b, L);
    const MemoryState bound = mem;  // frozen state at chunk start
    const int grad_lo = std::max(0, t0 - c + 1);
    std::vector<LossGrad> u = boundary_grads(bound, ls, grad_lo, t1, base);
    for (int n = t0; n < t1; ++n) {
      LossGrad g = window_sum(bound, u, grad_lo, ls, n, t0, c, mask);
      double step = base == LossBase::l2 ? -0.5 * ls.gates[n].eta : ls.gates[n].eta;
      decay_add(mem, ls.gates[n].alpha, step, g.g);
      res.outputs.push_back(forward(mem, ls.phi_q[n]));
      res.losses.push_back(g.loss);
    }
  }
  // Leave the window buffer consistent with the sequential state.
  for (int i = std::max(0, L - c); i < L; ++i)
    res.final_state.window.push_back(KvPair{ls.phi_k[i], ls.v[i]});
  return res;
}

SequenceResult chunked_titans(const RuleConfig& cfg, std::span<const Token> stream,
                              const ChunkPlan& plan, const GateSchedule& gates, MemoryState m0) {
  require(plan.b >= 1, "chunked_titans: chunk size must be >= 1");
  require(cfg.kind == RuleKind::titans, "chunked_titans: titans rule only");
  const int L = static_cast<int>(stream.size());
  LiftedStream ls = lift_stream(cfg, stream, gates);

  SequenceResult res;
  res.final_state = init_rule_state(cfg, std::move(m0));
  MemoryState& mem = res.final_state.memory;

  for (int t0 = 0; t0 < L; t0 += plan.b) {
    const int t1 = std::min(t0 + plan.b, L);
    const MemoryState bound = mem;
    std::vector<LossGrad> lu = boundary_grads(bound, ls, t0, t1, LossBase::l2);
    std::vector<GradState> u;
    std::vector<double> thetas(t1 - t0), etas(t1 - t0);
    for (int n = t0; n < t1; ++n) {
      u.push_back(lu[n - t0].g);
      thetas[n - t0] = ls.gates[n].theta;
      etas[n - t0] = 0.5 * ls.gates[n].eta;
    }
    std::vector<GradState> s = expand_momentum(u, thetas, etas, *res.final_state.momentum);
    for (int n = t0; n < t1; ++n) {
      decay_add(mem, ls.gates[n].alpha, 1.0, s[n - t0]);
      res.outputs.push_back(forward(mem, ls.phi_q[n]));
      res.losses.push_back(lu[n - t0].loss);
    }
    if (!s.empty()) *res.final_state.momentum = std::move(s.back());
  }
  return res;
}

SequenceResult chunked_atlas(const RuleConfig& cfg, std::span<const Token> stream,
                             const ChunkPlan& plan, const GateSchedule& gates, MemoryState m0) {
  require(plan.b >= 1, "chunked_atlas: chunk size must be >= 1");
  require(plan.c == cfg.window_c, "chunked_atlas: plan.c must match cfg.window_c");
  require(cfg.kind == RuleKind::atlas, "chunked_atlas: atlas rule only");
  const int L = static_cast<int>(stream.size());
  const int c = plan.c;
  LiftedStream ls = lift_stream(cfg, stream, gates);
  Mat mask = build_window_mask(plan.b, c);

  SequenceResult res;
  res.final_state = init_rule_state(cfg, std::move(m0));
  MemoryState& mem = res.final_state.memory;

  for (int t0 = 0; t0 < L; t0 += plan.b) {
    const int t1 = std::min(t0 + plan.b, L);
    const MemoryState bound = mem;
    const int grad_lo = std::max(0, t0 - c + 1);
    std::vector<LossGrad> u = boundary_grads(bound, ls, grad_lo, t1, LossBase::l2);
    std::vector<GradState> win(t1 - t0, GradState{});
    std::vector<double> losses(t1 - t0, 0.0);
    std::vector<double> thetas(t1 - t0), etas(t1 - t0);
    for (int n = t0; n < t1; ++n) {
      LossGrad g = window_sum(bound, u, grad_lo, ls, n, t0, c, mask);
      win[n - t0] = std::move(g.g);
      losses[n - t0] = g.loss;
      thetas[n - t0] = ls.gates[n].theta;
      etas[n - t0] = -0.5;  // momentum accumulates +grad/2
    }
    std::vector<GradState> s = expand_momentum(win, thetas, etas, *res.final_state.momentum);
    for (int n = t0; n < t1; ++n) {
      // Every expanded momentum is orthogonalized independently, one Newton-
      // Schulz call per weight matrix.
      for (size_t w = 0; w < mem.weights.size(); ++w) {
        Mat dir = newton_schulz(s[n - t0].weights[w], cfg.ns_steps);
        Mat& wm = mem.weights[w];
        for (size_t j = 0; j < wm.a.size(); ++j)
          wm.a[j] = ls.gates[n].alpha * wm.a[j] - ls.gates[n].eta * dir.a[j];
      }
      res.outputs.push_back(forward(mem, ls.phi_q[n]));
      res.losses.push_back(losses[n - t0]);
    }
    if (!s.empty()) *res.final_state.momentum = std::move(s.back());
  }
  for (int i = std::max(0, L - c); i < L; ++i)
    res.final_state.window.push_back(KvPair{ls.phi_k[i], ls.v[i]});
  return res;
}

}  // namespace memlab
