#pragma once

#include <cstdint>

#include "memlab/feature_maps.hpp"
#include "memlab/memory_arch.hpp"

namespace memlab {

enum class FitMethod { pseudoinverse, gd };

struct GdBudget {
  long max_iters = 60000;
  double init_step = 0.0;  // 0 selects an automatic step
};

/// One exact-fit probe: can a memory of the given architecture store m
/// generic (key, value) pairs within tol_fit? "Capacity" is operationalized
/// as the exact-fit boundary under random unit keys and values, which makes
/// the asymptotic statements falsifiable at desk scale.
struct CapacityProbe {
  int d_k = 8;
  int d_v = 8;
  int m = 8;
  FeatureMapSpec map = FeatureMapSpec::identity();
  bool block_map = false;  // pure self-tensor block x^{(x)p} instead of the stacked lift
  int block_degree = 1;
  MemoryArch arch = MemoryArch::matrix;
  int hidden = 0;  // deep arch hidden width; 0 selects 4 * d_v
  int blocks = 1;  // residual blocks for stackL
  FitMethod fit = FitMethod::pseudoinverse;
  GdBudget gd;
  double tol_fit = 1e-6;
  uint64_t seed = 0;
};

struct CapacityReport {
  int m = 0;
  long long lifted_dim = 0;    // ambient dimension of the lifted keys
  long long monomial_dim = 0;  // distinct monomials (upper bound on key rank)
  int key_rank = 0;            // svd rank of the (lifted) key matrix
  double fit_residual = 0.0;   // max_i ||M(k_i) - v_i||
  bool fits = false;
  int retries = 0;  // key resamples due to rank deficiency
  long iters = 0;   // gd iterations spent
  bool budget_exhausted = false;  // gd stopped on budget, not on fit/plateau
};

/// Matrix memory, identity map. Pseudoinverse (or gd-to-convergence) fit;
/// fits iff m <= rank of the key matrix for generic instances.
CapacityReport probe_linear_capacity(const CapacityProbe& probe);

/// Matrix memory over polynomial-lifted keys. Reports both the ambient
/// lifted dimension and the distinct-monomial count; the fit boundary tracks
/// the rank of the lifted key matrix, which is capped by the monomial count.
CapacityReport probe_poly_capacity(const CapacityProbe& probe);

/// Deep memory fitted by full-batch gradient descent within a fixed budget.
/// A non-fit means "not fit within budget": the report keeps the final
/// residual and whether the budget ran out rather than throwing.
CapacityReport probe_deep_capacity(const CapacityProbe& probe);

}  // namespace memlab
