#include "memlab/capacity.hpp"

#include <algorithm>
#include <cmath>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

long long binom(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Distinct monomials reachable by the lift (degree <= p stacked, == p block).
long long monomial_count(int d, int degree, bool block) {
  if (block) return binom(d + degree - 1, degree);
  return binom(d + degree, degree);  // hockey-stick sum over degrees 0..p
}

Vec lift_key(const CapacityProbe& p, const Vec& k) {
  if (p.block_map) return self_tensor(k, p.block_degree);
  return apply_poly(p.map, k);
}

struct Instance {
  std::vector<Vec> keys;    // lifted
  std::vector<Vec> values;  // unit gaussian
  Mat key_mat;              // D x m, lifted keys as columns
  int rank = 0;
  int retries = 0;
};

/// Gaussian keys, rejection-resampled until the lifted key matrix has the
/// generic rank min(m, monomial_dim). Identity-map probes draw unit keys;
/// polynomial probes keep the raw scale, since restriction to the unit
/// sphere ties the quadratic trace to the constant block of a stacked lift
/// and drops the generic monomial rank by one.
Instance draw_instance(const CapacityProbe& p, long long monomial_dim, bool unit_keys) {
  Rng rng(p.seed);
  Instance inst;
  int expected_rank = static_cast<int>(std::min<long long>(p.m, monomial_dim));
  for (int attempt = 0; attempt < 64; ++attempt) {
    inst.keys.clear();
    inst.values.clear();
    for (int i = 0; i < p.m; ++i) {
      inst.keys.push_back(lift_key(p, unit_keys ? rng.unit_vec(p.d_k) : rng.gaussian_vec(p.d_k)));
      inst.values.push_back(rng.unit_vec(p.d_v));
    }
    int d = static_cast<int>(inst.keys[0].size());
    inst.key_mat = Mat(d, p.m);
    for (int j = 0; j < p.m; ++j)
      for (int i = 0; i < d; ++i) inst.key_mat(i, j) = inst.keys[j][i];
    inst.rank = svd_rank(inst.key_mat);
    if (inst.rank >= expected_rank) return inst;
    ++inst.retries;
  }
  return inst;  // rank-deficient after 64 tries; report as-is
}

double max_pair_residual(const MemoryState& m, const Instance& inst) {
  double worst = 0.0;
  for (size_t i = 0; i < inst.keys.size(); ++i) {
    Vec r = forward(m, inst.keys[i]);
    axpy(r, -1.0, inst.values[i]);
    worst = std::max(worst, norm2(r));
  }
  return worst;
}

/// Full-batch gd on ||M K - V||_F^2 from M0 = 0 with a spectrally safe step;
/// converges to the minimum-norm interpolant when m <= rank.
CapacityReport matrix_gd_fit(const CapacityProbe& p, const Instance& inst,
                             CapacityReport report) {
  int d = inst.key_mat.rows;
  Mat vmat(p.d_v, p.m);
  for (int j = 0; j < p.m; ++j)
    for (int i = 0; i < p.d_v; ++i) vmat(i, j) = inst.values[j][i];
  SvdResult s = svd_oracle(inst.key_mat);
  double smax = s.sigma.empty() ? 0.0 : s.sigma[0];
  double lr = p.gd.init_step > 0.0 ? p.gd.init_step : (smax > 0.0 ? 0.5 / (smax * smax) : 1.0);

  MemoryState m;
  m.arch = MemoryArch::matrix;
  m.in_dim = d;
  m.out_dim = p.d_v;
  m.weights = {Mat::zeros(p.d_v, d)};
  Mat kt = transpose(inst.key_mat);
  for (long it = 0; it < p.gd.max_iters; ++it) {
    report.iters = it + 1;
    Mat resid = sub(matmul(m.weights[0], inst.key_mat), vmat);
    axpy(m.weights[0], -2.0 * lr, matmul(resid, kt));
    if (it % 16 == 0 || it + 1 == p.gd.max_iters) {
      report.fit_residual = max_pair_residual(m, inst);
      if (report.fit_residual <= p.tol_fit) {
        report.fits = true;
        return report;
      }
    }
  }
  report.fit_residual = max_pair_residual(m, inst);
  report.fits = report.fit_residual <= p.tol_fit;
  report.budget_exhausted = !report.fits;
  return report;
}

CapacityReport matrix_probe(const CapacityProbe& p, long long lifted_dim,
                            long long monomial_dim, bool unit_keys) {
  if (p.m < 1 || p.d_k < 1 || p.d_v < 1) throw ShapeError("capacity probe: need m, d_k, d_v >= 1");
  CapacityReport report;
  report.m = p.m;
  report.lifted_dim = lifted_dim;
  report.monomial_dim = monomial_dim;
  Instance inst = draw_instance(p, monomial_dim, unit_keys);
  report.key_rank = inst.rank;
  report.retries = inst.retries;

  if (p.fit == FitMethod::gd) return matrix_gd_fit(p, inst, report);

  Mat vmat(p.d_v, p.m);
  for (int j = 0; j < p.m; ++j)
    for (int i = 0; i < p.d_v; ++i) vmat(i, j) = inst.values[j][i];
  MemoryState m;
  m.arch = MemoryArch::matrix;
  m.in_dim = inst.key_mat.rows;
  m.out_dim = p.d_v;
  m.weights = {matmul(vmat, pinv(inst.key_mat))};
  report.fit_residual = max_pair_residual(m, inst);
  report.fits = report.fit_residual <= p.tol_fit;
  return report;
}

}  // namespace

CapacityReport probe_linear_capacity(const CapacityProbe& probe) {
  if (probe.arch != MemoryArch::matrix)
    throw ShapeError("probe_linear_capacity: matrix architecture only");
  if (probe.map.kind != MapKind::identity || probe.block_map)
    throw ShapeError("probe_linear_capacity: identity map only");
  return matrix_probe(probe, probe.d_k, probe.d_k, /*unit_keys=*/true);
}

CapacityReport probe_poly_capacity(const CapacityProbe& probe) {
  if (probe.arch != MemoryArch::matrix)
    throw ShapeError("probe_poly_capacity: matrix architecture only");
  int degree = probe.block_map ? probe.block_degree : probe.map.degree;
  long long lifted = probe.block_map
                         ? static_cast<long long>(std::llround(std::pow(probe.d_k, degree)))
                         : probe.map.lifted_dim(probe.d_k);
  return matrix_probe(probe, lifted, monomial_count(probe.d_k, degree, probe.block_map),
                      /*unit_keys=*/false);
}

CapacityReport probe_deep_capacity(const CapacityProbe& probe) {
  if (probe.arch == MemoryArch::matrix)
    throw ShapeError("probe_deep_capacity: deep architecture required");
  if (probe.m < 1 || probe.d_k < 1 || probe.d_v < 1)
    throw ShapeError("capacity probe: need m, d_k, d_v >= 1");
  CapacityReport report;
  report.m = probe.m;
  report.lifted_dim = probe.d_k;
  report.monomial_dim = probe.d_k;
  Instance inst = draw_instance(probe, probe.d_k, /*unit_keys=*/true);
  report.key_rank = inst.rank;
  report.retries = inst.retries;

  MemoryDims dims{probe.d_k, probe.d_v, probe.hidden, probe.blocks};
  MemoryState m = init_memory(probe.arch, dims, probe.seed + 0x9e3779b9ULL, Activation::gelu);

  auto batch_loss_grad = [&](const MemoryState& state, bool want_grad, GradState* g) {
    double loss = 0.0;
    if (want_grad) *g = zero_grads_like(state);
    for (size_t i = 0; i < inst.keys.size(); ++i) {
      if (want_grad) {
        LossGrad lg = grad_l2(state, inst.keys[i], inst.values[i]);
        loss += lg.loss;
        grads_axpy(*g, 1.0, lg.g);
      } else {
        Vec r = forward(state, inst.keys[i]);
        axpy(r, -1.0, inst.values[i]);
        loss += dot(r, r);
      }
    }
    return loss;
  };

  double lr = probe.gd.init_step > 0.0 ? probe.gd.init_step : 1.0 / probe.m;
  GradState g;
  double loss = batch_loss_grad(m, true, &g);
  double best_loss = loss;
  long since_improve = 0;
  const long plateau_window = 4000;

  for (long it = 0; it < probe.gd.max_iters; ++it) {
    report.iters = it + 1;
    // Backtracking step: halve until the full-batch loss decreases.
    MemoryState trial = m;
    double trial_loss = 0.0;
    int halvings = 0;
    for (; halvings < 48; ++halvings) {
      trial = m;
      for (size_t w = 0; w < trial.weights.size(); ++w)
        axpy(trial.weights[w], -lr, g.weights[w]);
      trial_loss = batch_loss_grad(trial, false, nullptr);
      if (trial_loss <= loss) break;
      lr *= 0.5;
    }
    if (halvings == 48) break;  // no descent direction progress left
    m = std::move(trial);
    loss = trial_loss;
    lr = std::min(lr * 1.05, 64.0);

    if (loss < best_loss * (1.0 - 1e-9)) {
      best_loss = loss;
      since_improve = 0;
    } else if (++since_improve > plateau_window) {
      break;  // stalled far above tol; report honestly as non-fit
    }

    if (it % 32 == 0) {
      report.fit_residual = max_pair_residual(m, inst);
      if (report.fit_residual <= probe.tol_fit) {
        report.fits = true;
        return report;
      }
    }
    if (it + 1 < probe.gd.max_iters) loss = batch_loss_grad(m, true, &g);
  }
  report.fit_residual = max_pair_residual(m, inst);
  report.fits = report.fit_residual <= probe.tol_fit;
  report.budget_exhausted = !report.fits && report.iters >= probe.gd.max_iters;
  return report;
}

}  // namespace memlab
