#include "memlab/equivalence.hpp"

#include <algorithm>
#include <cmath>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

std::vector<Token> random_tokens(uint64_t seed, int n, int d, bool unit) {
  Rng rng(seed);
  std::vector<Token> toks;
  for (int i = 0; i < n; ++i) {
    toks.push_back(unit ? Token{rng.unit_vec(d), rng.unit_vec(d), rng.unit_vec(d)}
                        : Token{rng.gaussian_vec(d), rng.gaussian_vec(d), rng.gaussian_vec(d)});
  }
  return toks;
}

GateSchedule varied_schedule(uint64_t seed, int c, int n) {
  Rng rng(seed);
  std::vector<StepGates> steps;
  for (int t = 0; t < n; ++t) {
    StepGates g;
    g.alpha = 0.9 + 0.1 * rng.uniform();
    g.eta = 0.05 + 0.25 * rng.uniform();
    g.theta = rng.uniform();
    for (int i = 0; i < c; ++i) g.gammas.push_back(rng.uniform());
    steps.push_back(std::move(g));
  }
  return GateSchedule::per_step(std::move(steps));
}

double state_diff(const RuleState& a, const RuleState& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.memory.weights.size(); ++i)
    d = std::max(d, max_abs_diff(a.memory.weights[i], b.memory.weights[i]));
  return d;
}

void fold(EquivCheck& c, double diff) { c.max_abs_diff = std::max(c.max_abs_diff, diff); }

void finish(std::vector<EquivCheck>& out, EquivCheck c) {
  c.pass = c.max_abs_diff <= c.tol;
  out.push_back(std::move(c));
}

/// Generic stepper against the matrix closed form along one stream.
double closed_form_diff(const RuleConfig& cfg, uint64_t seed, int steps, int d) {
  bool unit = cfg.map.kind == MapKind::exp_truncated;
  std::vector<Token> toks = random_tokens(seed, steps, d, unit);
  GateSchedule sched = varied_schedule(seed + 1000, cfg.window_c, steps);
  int lifted = rule_input_dim(cfg, d);
  RuleState rs = init_rule_state(cfg, init_memory(MemoryArch::matrix, MemoryDims{lifted, d}, 0));
  Mat closed = Mat::zeros(d, lifted);
  std::deque<KvPair> window;
  double worst = 0.0;
  for (int t = 0; t < steps; ++t) {
    StepGates g = sched.at(t, toks[t].k);
    step_rule(rs, cfg, toks[t].k, toks[t].v, g);
    Vec phi = apply_poly(cfg.map, toks[t].k);
    switch (cfg.kind) {
      case RuleKind::hebbian:
      case RuleKind::deeptransformer:
        closed = closed_form::hebbian_step(closed, phi, toks[t].v, g.alpha, g.eta);
        break;
      case RuleKind::delta:
        closed = closed_form::delta_step(closed, phi, toks[t].v, g.alpha, g.eta);
        break;
      case RuleKind::omega:
      case RuleKind::dot:
      case RuleKind::swla: {
        window.push_back(KvPair{phi, toks[t].v});
        if (static_cast<int>(window.size()) > cfg.window_c) window.pop_front();
        std::vector<KvPair> win(window.begin(), window.end());
        closed = cfg.kind == RuleKind::swla
                     ? closed_form::windowed_dot_step(closed, win, g.gammas, g.alpha, g.eta)
                     : closed_form::windowed_l2_step(closed, win, g.gammas, g.alpha, g.eta);
        break;
      }
      default:
        throw ShapeError("closed_form_diff: rule has no closed form");
    }
    worst = std::max(worst, max_abs_diff(rs.memory.weights[0], closed));
  }
  return worst;
}

}  // namespace

std::vector<EquivCheck> rule_equivalence_suite(int steps, int n_seeds) {
  const int d = 6;
  std::vector<EquivCheck> out;

  EquivCheck omega_delta{"omega_c1_vs_delta", 0.0, 1e-10, false};
  EquivCheck swla_hebbian{"swla_c1_identity_vs_hebbian", 0.0, 1e-10, false};
  EquivCheck titans_gd{"titans_no_momentum_vs_delta", 0.0, 1e-10, false};
  for (int s = 0; s < n_seeds; ++s) {
    uint64_t seed = 77 + 13 * s;
    std::vector<Token> toks = random_tokens(seed, steps, d, false);
    Rng grng(seed + 5);
    MemoryState m0 = init_memory(MemoryArch::matrix, MemoryDims{d, d}, 0);

    RuleConfig omega{RuleKind::omega};
    RuleConfig delta{RuleKind::delta};
    RuleConfig swla{RuleKind::swla};
    RuleConfig hebbian{RuleKind::hebbian};
    RuleConfig titans{RuleKind::titans};
    RuleState ro = init_rule_state(omega, m0);
    RuleState rd = init_rule_state(delta, m0);
    RuleState rsw = init_rule_state(swla, m0);
    RuleState rh = init_rule_state(hebbian, m0);
    RuleState rt = init_rule_state(titans, m0);
    RuleState rtd = init_rule_state(delta, m0);
    for (int t = 0; t < steps; ++t) {
      double alpha = 0.9 + 0.1 * grng.uniform();
      double eta = 0.05 + 0.3 * grng.uniform();
      double gamma = grng.uniform();
      step_omega(ro, omega, toks[t].k, toks[t].v, StepGates{alpha, eta, 0.0, {gamma}});
      step_delta(rd, delta, toks[t].k, toks[t].v, StepGates{alpha, eta * gamma, 0.0, {}});
      fold(omega_delta, state_diff(ro, rd));

      step_swla(rsw, swla, toks[t].k, toks[t].v, StepGates{alpha, eta, 0.0, {gamma}});
      step_hebbian(rh, hebbian, toks[t].k, toks[t].v, StepGates{alpha, eta * gamma, 0.0, {}});
      fold(swla_hebbian, state_diff(rsw, rh));

      step_titans(rt, titans, toks[t].k, toks[t].v, StepGates{alpha, eta, 0.0, {}});
      step_delta(rtd, delta, toks[t].k, toks[t].v, StepGates{alpha, eta, 0.0, {}});
      fold(titans_gd, state_diff(rt, rtd));
    }
  }
  finish(out, omega_delta);
  finish(out, swla_hebbian);
  finish(out, titans_gd);

  struct Named {
    const char* name;
    RuleConfig cfg;
  };
  std::vector<Named> closed;
  closed.push_back({"hebbian_closed_form", RuleConfig{RuleKind::hebbian}});
  closed.push_back({"delta_closed_form", RuleConfig{RuleKind::delta}});
  RuleConfig omega4{RuleKind::omega};
  omega4.window_c = 4;
  closed.push_back({"omega_closed_form", omega4});
  RuleConfig swla3{RuleKind::swla};
  swla3.window_c = 3;
  closed.push_back({"swla_closed_form", swla3});
  RuleConfig dt{RuleKind::deeptransformer};
  dt.map = FeatureMapSpec::exp_truncated(4);
  closed.push_back({"deeptransformer_closed_form", dt});
  RuleConfig dotr{RuleKind::dot};
  dotr.map = FeatureMapSpec::exp_truncated(3);
  dotr.window_c = 2;
  closed.push_back({"dot_closed_form", dotr});

  for (const Named& n : closed) {
    EquivCheck c{n.name, 0.0, 1e-10, false};
    for (int s = 0; s < n_seeds; ++s) {
      int dim = n.cfg.map.kind == MapKind::exp_truncated ? 3 : d;
      fold(c, closed_form_diff(n.cfg, 311 + 7 * s, steps, dim));
    }
    finish(out, c);
  }
  return out;
}

std::vector<EquivCheck> chunk_equivalence_suite(int tokens, int n_seeds) {
  const int d = 5;
  std::vector<EquivCheck> out;
  EquivCheck omega_b1{"chunked_omega_b1_vs_sequential", 0.0, 1e-12, false};
  EquivCheck titans_b1{"chunked_titans_b1_vs_sequential", 0.0, 1e-12, false};
  EquivCheck atlas_b1{"chunked_atlas_b1_vs_sequential", 0.0, 1e-12, false};
  EquivCheck momentum{"expand_momentum_vs_unroll", 0.0, 1e-13, false};

  for (int s = 0; s < n_seeds; ++s) {
    uint64_t seed = 901 + 17 * s;
    std::vector<Token> toks = random_tokens(seed, tokens, d, false);
    MemoryState m0 = init_memory(MemoryArch::matrix, MemoryDims{d, d}, 0);

    RuleConfig omega{RuleKind::omega};
    omega.window_c = 4;
    GateSchedule so = varied_schedule(seed + 1, 4, tokens);
    SequenceResult seq = run_sequence(omega, toks, so, m0);
    SequenceResult chk = chunked_omega(omega, toks, ChunkPlan{1, 4}, so, m0);
    fold(omega_b1, state_diff(seq.final_state, chk.final_state));
    for (int t = 0; t < tokens; ++t)
      fold(omega_b1, max_abs_diff(seq.outputs[t], chk.outputs[t]));

    RuleConfig titans{RuleKind::titans};
    GateSchedule st = varied_schedule(seed + 2, 1, tokens);
    seq = run_sequence(titans, toks, st, m0);
    chk = chunked_titans(titans, toks, ChunkPlan{1, 1}, st, m0);
    fold(titans_b1, state_diff(seq.final_state, chk.final_state));
    fold(titans_b1,
         max_abs_diff(seq.final_state.momentum->weights[0], chk.final_state.momentum->weights[0]));

    RuleConfig atlas{RuleKind::atlas};
    atlas.window_c = 3;
    atlas.ns_steps = 5;
    GateSchedule sa = varied_schedule(seed + 3, 3, tokens);
    seq = run_sequence(atlas, toks, sa, m0);
    chk = chunked_atlas(atlas, toks, ChunkPlan{1, 3}, sa, m0);
    fold(atlas_b1, state_diff(seq.final_state, chk.final_state));
    fold(atlas_b1,
         max_abs_diff(seq.final_state.momentum->weights[0], chk.final_state.momentum->weights[0]));

    // Momentum expansion against the plain recursion.
    Rng rng(seed + 4);
    MemoryState shape = init_memory(MemoryArch::matrix, MemoryDims{d, d}, 0);
    std::vector<GradState> u;
    std::vector<double> thetas, etas;
    for (int i = 0; i < 8; ++i) {
      GradState g = zero_grads_like(shape);
      g.weights[0] = rng.gaussian_mat(d, d);
      u.push_back(std::move(g));
      thetas.push_back(rng.uniform());
      etas.push_back(rng.uniform(0.1, 2.0));
    }
    GradState s0 = zero_grads_like(shape);
    s0.weights[0] = rng.gaussian_mat(d, d);
    auto expanded = expand_momentum(u, thetas, etas, s0);
    Mat acc = s0.weights[0];
    for (int t = 0; t < 8; ++t) {
      acc = scale(acc, thetas[t]);
      axpy(acc, -etas[t], u[t].weights[0]);
      fold(momentum, max_abs_diff(expanded[t].weights[0], acc));
    }
  }
  finish(out, omega_b1);
  finish(out, titans_b1);
  finish(out, atlas_b1);
  finish(out, momentum);
  return out;
}

}  // namespace memlab
