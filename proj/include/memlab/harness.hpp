#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memlab/attention.hpp"
#include "memlab/rules.hpp"

namespace memlab {

// ---------------------------------------------------------------------------
// Online function-learning settings
// ---------------------------------------------------------------------------

enum class SettingKind { low_rank, mlp_map, attn_mlp, attn_outputs_as_inputs, swa_mlp };

const char* setting_name(SettingKind k);

/// Sequence-to-sequence target generators. Settings 3 and 5 run the targets
/// through causal (or sliding-window) attention over randomly initialized
/// projections; with untrained projections the attention matrix is not
/// spiky, so those outputs sit close to running means of the value vectors.
struct LearnabilitySetting {
  SettingKind kind = SettingKind::low_rank;
  int d = 256;
  int t = 4096;        // stream length
  int rank = 0;        // low_rank; 0 selects full rank d
  int swa_window = 512;
  uint64_t seed = 0;
};

struct SettingStream {
  std::vector<Vec> inputs;
  std::vector<Vec> targets;
};

SettingStream gen_setting(const LearnabilitySetting& s);

// ---------------------------------------------------------------------------
// Learner and outer-loop optimizers
// ---------------------------------------------------------------------------

/// Plain bias-free MLP learner: n_hidden hidden layers of width
/// expansion * d, GELU between layers, linear output.
struct LearnerMlp {
  int d = 0;
  int hidden = 0;
  Activation act = Activation::gelu;
  std::vector<Mat> w;
};

LearnerMlp init_learner(int d, int n_hidden, int expansion, uint64_t seed);
Vec learner_forward(const LearnerMlp& m, const Vec& x);

struct LearnerLossGrad {
  double loss = 0.0;
  bool normalized = true;  // false when ||target|| = 0 forced the raw loss
  std::vector<Mat> g;
};

/// loss_j = ||M(i_j) - o_j||^2 / ||o_j||^2; when the target norm is zero the
/// step falls back to the unnormalized loss.
LearnerLossGrad learner_loss_grad(const LearnerMlp& m, const Vec& input, const Vec& target);

enum class Optimizer { sgd, rmsprop, adam };

const char* optimizer_name(Optimizer o);

struct OptimizerConfig {
  Optimizer kind = Optimizer::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.99;  // rmsprop decay
  double eps = 1e-8;
};

struct OptState {
  std::vector<Mat> m1;
  std::vector<Mat> m2;
  long t = 0;
};

OptState init_opt_state(const std::vector<Mat>& params);

/// Textbook update rules; adam uses bias correction. Deterministic.
void outer_optimizer_step(const OptimizerConfig& cfg, OptState& state, std::vector<Mat>& params,
                          const std::vector<Mat>& grads);

struct OnlineTrainer {
  OptimizerConfig opt;
  int n_hidden = 2;
  int expansion = 1;
  uint64_t learner_seed = 1;
};

struct LearnabilityResult {
  std::vector<double> losses;      // one per sequence position
  int skipped_normalization = 0;   // zero-norm targets hit
  double final_window_mean = 0.0;  // mean loss over the trailing 10%
};

LearnabilityResult run_learnability(const LearnabilitySetting& setting,
                                    const OnlineTrainer& trainer);

// ---------------------------------------------------------------------------
// Training-free associative recall probe
// ---------------------------------------------------------------------------

/// Write n_pairs random unit (key, value) pairs through a memory rule, then
/// query every key back and score nearest-neighbor identification of its
/// value among all stored values plus optional distractors.
struct RecallTask {
  int n_pairs = 8;
  int d = 16;
  int distractors = 0;
  uint64_t seed = 0;
};

struct RecallConfig {
  RuleConfig rule;
  StepGates gates;
  int write_passes = 1;
  /// Override eta per write with 1/||phi(k)||^2 (the exact one-shot
  /// interpolation step for l2 rules).
  bool normalized_step = true;
};

struct RecallResult {
  double accuracy = 0.0;
  double mean_l2_error = 0.0;
  std::vector<double> per_pair_error;
};

RecallResult run_recall(const RecallTask& task, const RecallConfig& cfg);

}  // namespace memlab
