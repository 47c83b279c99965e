#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "memlab/feature_maps.hpp"
#include "memlab/objectives.hpp"

namespace memlab {

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

/// Per-step gate values. alpha is the retention (decay) on the memory, eta
/// the step size, theta the momentum decay, gammas the per-offset window
/// gates (newest token at index c-1).
///
/// Titans note: the momentum recurrence here is
///   S_t = theta * S_{t-1} - eta * grad,   M_t = alpha * M_{t-1} + S_t,
/// i.e. theta always means "momentum decay" and eta always means "gradient
/// step", regardless of which greek letters a given formulation attaches to
/// them.
struct StepGates {
  double alpha = 1.0;
  double eta = 1.0;
  double theta = 0.0;
  std::vector<double> gammas;
};

/// Gate source: constant, per-step scheduled, or a sigmoid function of the
/// token (in-context pruning). All sources produce values in the valid
/// ranges: alpha, theta, gamma in [0,1], eta >= 0.
class GateSchedule {
 public:
  static GateSchedule constant(StepGates gates);
  static GateSchedule per_step(std::vector<StepGates> steps);
  /// Data-dependent gates: each scalar is sigmoid(w . k) with seeded random
  /// projections w; gammas get one projection per window offset.
  static GateSchedule token_sigmoid(int key_dim, int window_c, uint64_t seed);

  StepGates at(int t, const Vec& k) const;

 private:
  std::function<StepGates(int, const Vec&)> fn_;
};

void validate_gates(const StepGates& g);

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

enum class RuleKind { hebbian, delta, titans, omega, atlas, dla, swla, deeptransformer, dot };

const char* rule_name(RuleKind k);
std::optional<RuleKind> rule_from_name(const std::string& name);

/// Which base loss a rule optimizes: dot-similarity rules accumulate outer
/// products; l2 rules are regression steps.
LossBase rule_base(RuleKind k);
bool rule_has_momentum(RuleKind k);
bool rule_has_window(RuleKind k);

struct RuleConfig {
  RuleKind kind = RuleKind::delta;
  FeatureMapSpec map = FeatureMapSpec::identity();
  int window_c = 1;  // local context length for windowed rules
  int ns_steps = 5;  // Newton-Schulz iterations (atlas)
};

/// Memory input dimension implied by the feature map for raw keys of size d_k.
int rule_input_dim(const RuleConfig& cfg, int d_k);

struct RuleState {
  MemoryState memory;
  std::optional<GradState> momentum;  // present for titans and atlas
  std::deque<KvPair> window;          // last c lifted pairs, newest at back
};

RuleState init_rule_state(const RuleConfig& cfg, MemoryState m0);

// Sign and scaling conventions, used consistently by every stepper and by
// the closed forms below:
//  * dot rules move along +grad of <M(phi k), v> (equivalently, descend its
//    negative), so a matrix memory accumulates M <- alpha M + eta v phi^T.
//  * l2 rules descend half the gradient of ||M(phi k) - v||^2, so a matrix
//    memory steps M <- alpha M - eta (M phi - v) phi^T and the delta closed
//    form carries the textbook step size: eta = 1/||phi||^2 interpolates.
void step_hebbian(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                  const StepGates& g);
void step_delta(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                const StepGates& g);
void step_titans(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                 const StepGates& g);
void step_omega(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                const StepGates& g);
void step_atlas(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                const StepGates& g);
void step_dla(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
              const StepGates& g);
void step_swla(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
               const StepGates& g);
void step_deeptransformer(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                          const StepGates& g);
void step_dot(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
              const StepGates& g);

/// Dispatch on cfg.kind. Returns the internal loss the step was taken from.
double step_rule(RuleState& rs, const RuleConfig& cfg, const Vec& k, const Vec& v,
                 const StepGates& g);

// ---------------------------------------------------------------------------
// Linear-memory closed forms (independent algebraic route, used as oracles
// against the generic gradient path and by the equivalence suites).
// ---------------------------------------------------------------------------

namespace closed_form {

Mat hebbian_step(const Mat& m, const Vec& phi_k, const Vec& v, double alpha, double eta);
Mat delta_step(const Mat& m, const Vec& phi_k, const Vec& v, double alpha, double eta);
/// Windowed l2 step M (alpha I - eta sum gamma phi phi^T) + eta sum gamma v phi^T
/// (omega; dot when the pairs are phi*-lifted).
Mat windowed_l2_step(const Mat& m, std::span<const KvPair> window, std::span<const double> gammas,
                     double alpha, double eta);
/// Windowed dot step alpha M + eta sum gamma v phi^T (swla).
Mat windowed_dot_step(const Mat& m, std::span<const KvPair> window,
                      std::span<const double> gammas, double alpha, double eta);

}  // namespace closed_form

// ---------------------------------------------------------------------------
// Sequence driver
// ---------------------------------------------------------------------------

struct Token {
  Vec k;
  Vec v;
  Vec q;
};

struct SequenceResult {
  std::vector<Vec> outputs;    // y_t = M_t(phi(q_t)) after each step
  std::vector<double> losses;  // internal loss at each step, pre-update
  RuleState final_state;
};

/// Streams tokens through a stepper; deterministic given inputs.
SequenceResult run_sequence(const RuleConfig& cfg, std::span<const Token> stream,
                            const GateSchedule& gates, MemoryState m0);

}  // namespace memlab
