#include "memlab/harness.hpp"

#include <algorithm>
#include <cmath>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

Mat gaussian_scaled(Rng& rng, int rows, int cols) {
  return rng.gaussian_mat(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)));
}

/// Target net for the MLP settings: one hidden GELU layer, no expansion.
struct TargetMlp {
  Mat w1, w2;
  Vec operator()(const Vec& x) const {
    Vec h = matvec(w1, x);
    for (double& v : h) v = activation_eval(Activation::gelu, v);
    return matvec(w2, h);
  }
};

TargetMlp sample_target_mlp(Rng& rng, int d) {
  return TargetMlp{gaussian_scaled(rng, d, d), gaussian_scaled(rng, d, d)};
}

}  // namespace

const char* setting_name(SettingKind k) {
  switch (k) {
    case SettingKind::low_rank: return "low_rank";
    case SettingKind::mlp_map: return "mlp_map";
    case SettingKind::attn_mlp: return "attn_mlp";
    case SettingKind::attn_outputs_as_inputs: return "attn_outputs_as_inputs";
    case SettingKind::swa_mlp: return "swa_mlp";
  }
  return "?";
}

SettingStream gen_setting(const LearnabilitySetting& s) {
  if (s.d < 2 || s.t < 1) throw ShapeError("gen_setting: need d >= 2 and t >= 1");
  Rng rng(s.seed);
  SettingStream stream;
  stream.inputs.reserve(s.t);
  stream.targets.reserve(s.t);

  std::vector<Vec> raw(s.t);
  for (Vec& x : raw) x = rng.gaussian_vec(s.d);

  switch (s.kind) {
    case SettingKind::low_rank: {
      int k = s.rank > 0 ? s.rank : s.d;
      Mat x = gaussian_scaled(rng, s.d, k);
      Mat y = gaussian_scaled(rng, k, s.d);
      Mat w = matmul(x, y);
      Mat wt = transpose(w);
      for (const Vec& in : raw) {
        stream.inputs.push_back(in);
        stream.targets.push_back(matvec(wt, in));
      }
      return stream;
    }
    case SettingKind::mlp_map: {
      TargetMlp target = sample_target_mlp(rng, s.d);
      for (const Vec& in : raw) {
        stream.inputs.push_back(in);
        stream.targets.push_back(target(in));
      }
      return stream;
    }
    default: break;
  }

  // Attention settings: q/k/v projections of the raw inputs, causal (or
  // sliding-window) attention, then a target MLP on the attention outputs.
  TargetMlp target = sample_target_mlp(rng, s.d);
  Mat wq = gaussian_scaled(rng, s.d, s.d);
  Mat wk = gaussian_scaled(rng, s.d, s.d);
  Mat wv = gaussian_scaled(rng, s.d, s.d);
  AttnBatch batch;
  batch.q = Mat(s.t, s.d);
  batch.k = Mat(s.t, s.d);
  batch.v = Mat(s.t, s.d);
  for (int j = 0; j < s.t; ++j) {
    Vec q = matvec_t(wq, raw[j]);
    Vec k = matvec_t(wk, raw[j]);
    Vec v = matvec_t(wv, raw[j]);
    for (int i = 0; i < s.d; ++i) {
      batch.q(j, i) = q[i];
      batch.k(j, i) = k[i];
      batch.v(j, i) = v[i];
    }
  }
  Mat attn = s.kind == SettingKind::swa_mlp ? sliding_window_attention(batch, s.swa_window)
                                            : softmax_attention(batch);
  for (int j = 0; j < s.t; ++j) {
    Vec aout(s.d);
    for (int i = 0; i < s.d; ++i) aout[i] = attn(j, i);
    Vec o = target(aout);
    stream.inputs.push_back(s.kind == SettingKind::attn_outputs_as_inputs ? aout : raw[j]);
    stream.targets.push_back(std::move(o));
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Learner
// ---------------------------------------------------------------------------

LearnerMlp init_learner(int d, int n_hidden, int expansion, uint64_t seed) {
  if (d < 1 || n_hidden < 1 || expansion < 1) throw ShapeError("init_learner: bad dims");
  LearnerMlp m;
  m.d = d;
  m.hidden = expansion * d;
  Rng rng(seed);
  auto fanin = [&](int rows, int cols) {
    double b = 1.0 / std::sqrt(static_cast<double>(cols));
    return rng.uniform_mat(rows, cols, -b, b);
  };
  m.w.push_back(fanin(m.hidden, d));
  for (int l = 1; l < n_hidden; ++l) m.w.push_back(fanin(m.hidden, m.hidden));
  m.w.push_back(fanin(d, m.hidden));
  return m;
}

Vec learner_forward(const LearnerMlp& m, const Vec& x) {
  Vec cur = x;
  for (size_t l = 0; l < m.w.size(); ++l) {
    cur = matvec(m.w[l], cur);
    if (l + 1 < m.w.size())
      for (double& v : cur) v = activation_eval(m.act, v);
  }
  return cur;
}

LearnerLossGrad learner_loss_grad(const LearnerMlp& m, const Vec& input, const Vec& target) {
  // Forward with caches.
  std::vector<Vec> layer_in;   // input to each weight
  std::vector<Vec> layer_pre;  // pre-activation of each weight
  Vec cur = input;
  for (size_t l = 0; l < m.w.size(); ++l) {
    layer_in.push_back(cur);
    cur = matvec(m.w[l], cur);
    layer_pre.push_back(cur);
    if (l + 1 < m.w.size())
      for (double& v : cur) v = activation_eval(m.act, v);
  }

  Vec r = cur;
  axpy(r, -1.0, target);
  double tn2 = dot(target, target);
  LearnerLossGrad out;
  out.normalized = tn2 > 0.0;
  double inv = out.normalized ? 1.0 / tn2 : 1.0;
  out.loss = dot(r, r) * inv;

  Vec delta = r;
  for (double& v : delta) v *= 2.0 * inv;
  out.g.resize(m.w.size());
  for (int l = static_cast<int>(m.w.size()) - 1; l >= 0; --l) {
    if (l + 1 < static_cast<int>(m.w.size()))
      for (size_t i = 0; i < delta.size(); ++i)
        delta[i] *= activation_deriv(m.act, layer_pre[l][i]);
    out.g[l] = outer(delta, layer_in[l]);
    if (l > 0) delta = matvec_t(m.w[l], delta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

const char* optimizer_name(Optimizer o) {
  switch (o) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::rmsprop: return "rmsprop";
    case Optimizer::adam: return "adam";
  }
  return "?";
}

OptState init_opt_state(const std::vector<Mat>& params) {
  OptState s;
  for (const Mat& p : params) {
    s.m1.emplace_back(p.rows, p.cols);
    s.m2.emplace_back(p.rows, p.cols);
  }
  return s;
}

void outer_optimizer_step(const OptimizerConfig& cfg, OptState& state, std::vector<Mat>& params,
                          const std::vector<Mat>& grads) {
  if (params.size() != grads.size() || params.size() != state.m1.size())
    throw ShapeError("outer_optimizer_step: layout mismatch");
  state.t += 1;
  for (size_t p = 0; p < params.size(); ++p) {
    Mat& w = params[p];
    const Mat& g = grads[p];
    if (w.rows != g.rows || w.cols != g.cols)
      throw ShapeError("outer_optimizer_step: grad shape mismatch");
    switch (cfg.kind) {
      case Optimizer::sgd:
        for (size_t i = 0; i < w.a.size(); ++i) w.a[i] -= cfg.lr * g.a[i];
        break;
      case Optimizer::rmsprop:
        for (size_t i = 0; i < w.a.size(); ++i) {
          double& v = state.m2[p].a[i];
          v = cfg.rho * v + (1.0 - cfg.rho) * g.a[i] * g.a[i];
          w.a[i] -= cfg.lr * g.a[i] / (std::sqrt(v) + cfg.eps);
        }
        break;
      case Optimizer::adam: {
        double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
        double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
        for (size_t i = 0; i < w.a.size(); ++i) {
          double& m1 = state.m1[p].a[i];
          double& m2 = state.m2[p].a[i];
          m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g.a[i];
          m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * g.a[i] * g.a[i];
          w.a[i] -= cfg.lr * (m1 / bc1) / (std::sqrt(m2 / bc2) + cfg.eps);
        }
        break;
      }
    }
  }
}

LearnabilityResult run_learnability(const LearnabilitySetting& setting,
                                    const OnlineTrainer& trainer) {
  SettingStream stream = gen_setting(setting);
  LearnerMlp learner = init_learner(setting.d, trainer.n_hidden, trainer.expansion,
                                    trainer.learner_seed);
  OptState opt = init_opt_state(learner.w);

  LearnabilityResult res;
  res.losses.reserve(stream.inputs.size());
  for (size_t j = 0; j < stream.inputs.size(); ++j) {
    LearnerLossGrad lg = learner_loss_grad(learner, stream.inputs[j], stream.targets[j]);
    if (!lg.normalized) ++res.skipped_normalization;
    res.losses.push_back(lg.loss);
    outer_optimizer_step(trainer.opt, opt, learner.w, lg.g);
  }

  size_t n = res.losses.size();
  size_t tail = std::max<size_t>(1, n / 10);
  double acc = 0.0;
  for (size_t j = n - tail; j < n; ++j) acc += res.losses[j];
  res.final_window_mean = acc / static_cast<double>(tail);
  return res;
}

// ---------------------------------------------------------------------------
// Recall probe
// ---------------------------------------------------------------------------

RecallResult run_recall(const RecallTask& task, const RecallConfig& cfg) {
  if (task.n_pairs < 1 || task.d < 1) throw ShapeError("run_recall: bad task dims");
  Rng rng(task.seed);
  std::vector<Vec> keys, values;
  for (int i = 0; i < task.n_pairs; ++i) {
    keys.push_back(rng.unit_vec(task.d));
    values.push_back(rng.unit_vec(task.d));
  }
  std::vector<Vec> pool = values;
  for (int i = 0; i < task.distractors; ++i) pool.push_back(rng.unit_vec(task.d));

  int lifted = rule_input_dim(cfg.rule, task.d);
  MemoryState m0 = init_memory(MemoryArch::matrix, MemoryDims{lifted, task.d}, task.seed);
  RuleState rs = init_rule_state(cfg.rule, std::move(m0));

  const bool l2_rule = rule_base(cfg.rule.kind) == LossBase::l2;
  for (int pass = 0; pass < cfg.write_passes; ++pass) {
    for (int i = 0; i < task.n_pairs; ++i) {
      StepGates g = cfg.gates;
      if (cfg.normalized_step && l2_rule) {
        Vec phi = apply_poly(cfg.rule.map, keys[i]);
        double n2 = dot(phi, phi);
        if (n2 > 0.0) g.eta = 1.0 / n2;
      }
      step_rule(rs, cfg.rule, keys[i], values[i], g);
    }
  }

  RecallResult res;
  res.per_pair_error.resize(task.n_pairs);
  int hits = 0;
  double err_acc = 0.0;
  for (int i = 0; i < task.n_pairs; ++i) {
    Vec y = forward(rs.memory, apply_poly(cfg.rule.map, keys[i]));
    Vec r = y;
    axpy(r, -1.0, values[i]);
    res.per_pair_error[i] = norm2(r);
    err_acc += res.per_pair_error[i];
    int best = -1;
    double best_d = HUGE_VAL;
    for (size_t c = 0; c < pool.size(); ++c) {
      Vec dvec = y;
      axpy(dvec, -1.0, pool[c]);
      double dist = dot(dvec, dvec);
      if (dist < best_d) {
        best_d = dist;
        best = static_cast<int>(c);
      }
    }
    if (best == i) ++hits;
  }
  res.accuracy = static_cast<double>(hits) / task.n_pairs;
  res.mean_l2_error = err_acc / task.n_pairs;
  return res;
}

}  // namespace memlab
