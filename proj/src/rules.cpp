#include "memlab/rules.hpp"

#include <cmath>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

void push_window(RuleState& rs, const RuleConfig& cfg, const Vec& phi_k, const Vec& v) {
  rs.window.push_back(KvPair{phi_k, v});
  while (static_cast<int>(rs.window.size()) > cfg.window_c) rs.window.pop_front();
}

std::vector<KvPair> window_vec(const RuleState& rs) {
  return {rs.window.begin(), rs.window.end()};
}

/// alpha-decay every weight, then add s * g to it.
void apply_update(MemoryState& m, double alpha, double s, const GradState& g) {
  for (size_t i = 0; i < m.weights.size(); ++i) {
    Mat& w = m.weights[i];
    const Mat& gw = g.weights[i];
    for (size_t j = 0; j < w.a.size(); ++j) w.a[j] = alpha * w.a[j] + s * gw.a[j];
  }
}

/// Single-pair dot-similarity accumulation: M <- alpha M + eta grad<.,.>.
double outer_product_step(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                          const StepGates& g) {
  Vec phi_k = apply_poly(cfg.map, k);
  LossGrad lg = grad_dot(rs.memory, phi_k, v);
  apply_update(rs.memory, g.alpha, g.eta, lg.g);
  return lg.loss;
}

/// Single-pair l2 descent: M <- alpha M - (eta/2) grad||.||^2.
double l2_descent_step(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                       const StepGates& g) {
  Vec phi_k = apply_poly(cfg.map, k);
  LossGrad lg = grad_l2(rs.memory, phi_k, v);
  apply_update(rs.memory, g.alpha, -0.5 * g.eta, lg.g);
  return lg.loss;
}

WindowLoss make_window_loss(const RuleConfig& cfg, const StepGates& g, LossBase base) {
  require(static_cast<int>(g.gammas.size()) == cfg.window_c,
          "windowed rule: gates must carry exactly c gammas");
  return WindowLoss{cfg.window_c, g.gammas, base};
}

}  // namespace

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

void validate_gates(const StepGates& g) {
  bool ok = g.alpha >= 0.0 && g.alpha <= 1.0 && g.eta >= 0.0 && g.theta >= 0.0 && g.theta <= 1.0;
  for (double gm : g.gammas) ok = ok && gm >= 0.0 && gm <= 1.0;
  if (!ok) throw ShapeError("gates out of range: need alpha,theta,gamma in [0,1], eta >= 0");
}

GateSchedule GateSchedule::constant(StepGates gates) {
  validate_gates(gates);
  GateSchedule s;
  s.fn_ = [gates](int, const Vec&) { return gates; };
  return s;
}

GateSchedule GateSchedule::per_step(std::vector<StepGates> steps) {
  for (const StepGates& g : steps) validate_gates(g);
  GateSchedule s;
  s.fn_ = [steps = std::move(steps)](int t, const Vec&) {
    if (t < 0 || t >= static_cast<int>(steps.size()))
      throw ShapeError("GateSchedule::per_step: step index out of range");
    return steps[t];
  };
  return s;
}

GateSchedule GateSchedule::token_sigmoid(int key_dim, int window_c, uint64_t seed) {
  Rng rng(seed);
  Vec wa = rng.gaussian_vec(key_dim);
  Vec we = rng.gaussian_vec(key_dim);
  Vec wt = rng.gaussian_vec(key_dim);
  std::vector<Vec> wg;
  for (int i = 0; i < window_c; ++i) wg.push_back(rng.gaussian_vec(key_dim));
  GateSchedule s;
  s.fn_ = [=](int, const Vec& k) {
    StepGates g;
    g.alpha = sigmoid(dot(wa, k));
    g.eta = sigmoid(dot(we, k));
    g.theta = sigmoid(dot(wt, k));
    g.gammas.resize(window_c);
    for (int i = 0; i < window_c; ++i) g.gammas[i] = sigmoid(dot(wg[i], k));
    return g;
  };
  return s;
}

StepGates GateSchedule::at(int t, const Vec& k) const {
  if (!fn_) throw ShapeError("GateSchedule: empty schedule");
  return fn_(t, k);
}

// ---------------------------------------------------------------------------
// Rule metadata
// ---------------------------------------------------------------------------

const char* rule_name(RuleKind k) {
  switch (k) {
    case RuleKind::hebbian: return "hebbian";
    case RuleKind::delta: return "delta";
    case RuleKind::titans: return "titans";
    case RuleKind::omega: return "omega";
    case RuleKind::atlas: return "atlas";
    case RuleKind::dla: return "dla";
    case RuleKind::swla: return "swla";
    case RuleKind::deeptransformer: return "deeptransformer";
    case RuleKind::dot: return "dot";
  }
  return "?";
}

std::optional<RuleKind> rule_from_name(const std::string& name) {
  for (RuleKind k : {RuleKind::hebbian, RuleKind::delta, RuleKind::titans, RuleKind::omega,
                     RuleKind::atlas, RuleKind::dla, RuleKind::swla, RuleKind::deeptransformer,
                     RuleKind::dot})
    if (name == rule_name(k)) return k;
  return std::nullopt;
}

LossBase rule_base(RuleKind k) {
  switch (k) {
    case RuleKind::hebbian:
    case RuleKind::dla:
    case RuleKind::swla:
    case RuleKind::deeptransformer:
      return LossBase::dot;
    default:
      return LossBase::l2;
  }
}

bool rule_has_momentum(RuleKind k) { return k == RuleKind::titans || k == RuleKind::atlas; }

bool rule_has_window(RuleKind k) {
  return k == RuleKind::omega || k == RuleKind::atlas || k == RuleKind::swla ||
         k == RuleKind::dot;
}

int rule_input_dim(const RuleConfig& cfg, int d_k) {
  long long d = cfg.map.lifted_dim(d_k);
  if (d > 1000000) throw CapacityError("rule_input_dim: lifted key dimension exceeds 1e6");
  return static_cast<int>(d);
}

RuleState init_rule_state(const RuleConfig& cfg, MemoryState m0) {
  RuleState rs;
  rs.memory = std::move(m0);
  if (rule_has_momentum(cfg.kind)) rs.momentum = zero_grads_like(rs.memory);
  return rs;
}

// ---------------------------------------------------------------------------
// Steppers
// ---------------------------------------------------------------------------

void step_hebbian(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                  const StepGates& g) {
  outer_product_step(rs, cfg, k, v, g);
}

void step_dla(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
              const StepGates& g) {
  outer_product_step(rs, cfg, k, v, g);
}

void step_deeptransformer(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                          const StepGates& g) {
  require(cfg.map.kind == MapKind::exp_truncated,
          "step_deeptransformer: requires the truncated exponential map");
  outer_product_step(rs, cfg, k, v, g);
}

void step_delta(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                const StepGates& g) {
  l2_descent_step(rs, cfg, k, v, g);
}

void step_titans(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                 const StepGates& g) {
  require(rs.momentum.has_value(), "step_titans: momentum state missing");
  Vec phi_k = apply_poly(cfg.map, k);
  LossGrad lg = grad_l2(rs.memory, phi_k, v);
  GradState& s = *rs.momentum;
  // S_t = theta S_{t-1} - eta grad/2; M_t = alpha M_{t-1} + S_t
  for (size_t i = 0; i < s.weights.size(); ++i)
    for (size_t j = 0; j < s.weights[i].a.size(); ++j)
      s.weights[i].a[j] = g.theta * s.weights[i].a[j] - 0.5 * g.eta * lg.g.weights[i].a[j];
  apply_update(rs.memory, g.alpha, 1.0, s);
}

void step_omega(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                const StepGates& g) {
  Vec phi_k = apply_poly(cfg.map, k);
  push_window(rs, cfg, phi_k, v);
  WindowLoss wl = make_window_loss(cfg, g, LossBase::l2);
  std::vector<KvPair> win = window_vec(rs);
  LossGrad lg = omega_loss_grad(rs.memory, win, wl);
  apply_update(rs.memory, g.alpha, -0.5 * g.eta, lg.g);
}

void step_dot(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
              const StepGates& g) {
  require(cfg.map.kind == MapKind::exp_truncated,
          "step_dot: requires the truncated exponential map");
  step_omega(rs, cfg, k, v, g);
}

void step_swla(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
               const StepGates& g) {
  Vec phi_k = apply_poly(cfg.map, k);
  push_window(rs, cfg, phi_k, v);
  WindowLoss wl = make_window_loss(cfg, g, LossBase::dot);
  std::vector<KvPair> win = window_vec(rs);
  LossGrad lg = omega_loss_grad(rs.memory, win, wl);
  apply_update(rs.memory, g.alpha, g.eta, lg.g);
}

void step_atlas(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                const StepGates& g) {
  require(rs.momentum.has_value(), "step_atlas: momentum state missing");
  Vec phi_k = apply_poly(cfg.map, k);
  push_window(rs, cfg, phi_k, v);
  WindowLoss wl = make_window_loss(cfg, g, LossBase::l2);
  std::vector<KvPair> win = window_vec(rs);
  LossGrad lg = omega_loss_grad(rs.memory, win, wl);
  GradState& s = *rs.momentum;
  // S_t = theta S_{t-1} + (window grad)/2, then each weight matrix is
  // orthogonalized independently: M <- alpha M - eta NS(S).
  for (size_t i = 0; i < s.weights.size(); ++i)
    for (size_t j = 0; j < s.weights[i].a.size(); ++j)
      s.weights[i].a[j] = g.theta * s.weights[i].a[j] + 0.5 * lg.g.weights[i].a[j];
  for (size_t i = 0; i < rs.memory.weights.size(); ++i) {
    Mat dir = newton_schulz(s.weights[i], cfg.ns_steps);
    Mat& w = rs.memory.weights[i];
    for (size_t j = 0; j < w.a.size(); ++j) w.a[j] = g.alpha * w.a[j] - g.eta * dir.a[j];
  }
}

double step_rule(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                 const StepGates& g) {
  validate_gates(g);
  // Recompute the pre-update loss for the record before stepping.
  Vec phi_k = apply_poly(cfg.map, k);
  double loss;
  if (rule_has_window(cfg.kind)) {
    std::vector<KvPair> win = window_vec(rs);
    win.push_back(KvPair{phi_k, v});
    while (static_cast<int>(win.size()) > cfg.window_c) win.erase(win.begin());
    WindowLoss wl = make_window_loss(cfg, g, rule_base(cfg.kind));
    loss = omega_loss_grad(rs.memory, win, wl).loss;
  } else {
    loss = rule_base(cfg.kind) == LossBase::l2 ? grad_l2(rs.memory, phi_k, v).loss
                                               : grad_dot(rs.memory, phi_k, v).loss;
  }
  switch (cfg.kind) {
    case RuleKind::hebbian: step_hebbian(rs, cfg, k, v, g); break;
    case RuleKind::delta: step_delta(rs, cfg, k, v, g); break;
    case RuleKind::titans: step_titans(rs, cfg, k, v, g); break;
    case RuleKind::omega: step_omega(rs, cfg, k, v, g); break;
    case RuleKind::atlas: step_atlas(rs, cfg, k, v, g); break;
    case RuleKind::dla: step_dla(rs, cfg, k, v, g); break;
    case RuleKind::swla: step_swla(rs, cfg, k, v, g); break;
    case RuleKind::deeptransformer: step_deeptransformer(rs, cfg, k, v, g); break;
    case RuleKind::dot: step_dot(rs, cfg, k, v, g); break;
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

namespace closed_form {

Mat hebbian_step(const Mat& m, const Vec& phi_k, const Vec& v, double alpha, double eta) {
  Mat out = scale(m, alpha);
  axpy(out, eta, outer(v, phi_k));
  return out;
}

Mat delta_step(const Mat& m, const Vec& phi_k, const Vec& v, double alpha, double eta) {
  // M (alpha I - eta phi phi^T) + eta v phi^T, assembled right-to-left.
  int d = static_cast<int>(phi_k.size());
  Mat p = Mat::identity(d);
  for (double& x : p.a) x *= alpha;
  axpy(p, -eta, outer(phi_k, phi_k));
  Mat out = matmul(m, p);
  axpy(out, eta, outer(v, phi_k));
  return out;
}

Mat windowed_l2_step(const Mat& m, std::span<const KvPair> window, std::span<const double> gammas,
                     double alpha, double eta) {
  int d = m.cols;
  int c = static_cast<int>(gammas.size());
  int w = static_cast<int>(window.size());
  Mat p = Mat::identity(d);
  for (double& x : p.a) x *= alpha;
  Mat b = Mat::zeros(m.rows, d);
  for (int j = 0; j < w; ++j) {
    double gm = gammas[c - w + j];
    axpy(p, -eta * gm, outer(window[j].phi_k, window[j].phi_k));
    axpy(b, eta * gm, outer(window[j].v, window[j].phi_k));
  }
  Mat out = matmul(m, p);
  axpy(out, 1.0, b);
  return out;
}

Mat windowed_dot_step(const Mat& m, std::span<const KvPair> window,
                      std::span<const double> gammas, double alpha, double eta) {
  int c = static_cast<int>(gammas.size());
  int w = static_cast<int>(window.size());
  Mat out = scale(m, alpha);
  for (int j = 0; j < w; ++j)
    axpy(out, eta * gammas[c - w + j], outer(window[j].v, window[j].phi_k));
  return out;
}

}  // namespace closed_form

// ---------------------------------------------------------------------------
// Sequence driver
// ---------------------------------------------------------------------------

SequenceResult run_sequence(const RuleConfig& cfg, std::span<const Token> stream,
                            const GateSchedule& gates, MemoryState m0) {
  SequenceResult res;
  res.final_state = init_rule_state(cfg, std::move(m0));
  res.outputs.reserve(stream.size());
  res.losses.reserve(stream.size());
  for (size_t t = 0; t < stream.size(); ++t) {
    const Token& tok = stream[t];
    StepGates g = gates.at(static_cast<int>(t), tok.k);
    double loss = step_rule(res.final_state, cfg, tok.k, tok.v, g);
    res.losses.push_back(loss);
    res.outputs.push_back(forward(res.final_state.memory, apply_poly(cfg.map, tok.q)));
  }
  return res;
}

}  // namespace memlab
