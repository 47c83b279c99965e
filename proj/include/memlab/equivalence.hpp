#pragma once

#include <string>
#include <vector>

#include "memlab/chunk_engine.hpp"

namespace memlab {

struct EquivCheck {
  std::string name;
  double max_abs_diff = 0.0;  // worst over all seeds and steps
  double tol = 0.0;
  bool pass = false;
};

/// Rule-level equivalences over random streams: the reduction lattice
/// (omega at c = 1 vs delta, swla at c = 1 with the identity map vs hebbian,
/// titans without momentum decay vs delta) and generic-gradient vs
/// closed-form agreement for every matrix rule with a closed form.
/// Tolerance 1e-10 across `steps`-token streams and `n_seeds` seeds.
std::vector<EquivCheck> rule_equivalence_suite(int steps, int n_seeds);

/// Chunk-level equivalences: chunked omega/titans/atlas at b = 1 against the
/// sequential steppers (1e-12 over `tokens` tokens) and the closed-form
/// momentum expansion against the sequential unroll (1e-13).
std::vector<EquivCheck> chunk_equivalence_suite(int tokens, int n_seeds);

}  // namespace memlab
