#include "memlab/feature_maps.hpp"

#include <cmath>

namespace memlab {

namespace {

Vec maybe_normalize(const FeatureMapSpec& spec, const Vec& x) {
  if (!spec.normalize_input) return x;
  double n = norm2(x);
  if (n == 0.0) return x;
  Vec out = x;
  for (double& v : out) v /= n;
  return out;
}

}  // namespace

FeatureMapSpec FeatureMapSpec::identity() {
  FeatureMapSpec s;
  s.kind = MapKind::identity;
  s.degree = 1;
  s.coeffs = {0.0, 1.0};
  return s;
}

FeatureMapSpec FeatureMapSpec::polynomial(int p) {
  return polynomial(p, init_taylor_coeffs(p));
}

FeatureMapSpec FeatureMapSpec::polynomial(int p, std::vector<double> coeffs) {
  if (p < 0) throw ShapeError("FeatureMapSpec: degree must be >= 0");
  if (coeffs.size() != static_cast<size_t>(p) + 1)
    throw ShapeError("FeatureMapSpec: need degree+1 coefficients");
  FeatureMapSpec s;
  s.kind = MapKind::polynomial;
  s.degree = p;
  s.coeffs = std::move(coeffs);
  return s;
}

FeatureMapSpec FeatureMapSpec::exp_truncated(int P) {
  if (P < 0) throw ShapeError("FeatureMapSpec: degree must be >= 0");
  FeatureMapSpec s;
  s.kind = MapKind::exp_truncated;
  s.degree = P;
  s.coeffs.resize(P + 1);
  double fact = 1.0;
  for (int i = 0; i <= P; ++i) {
    if (i > 0) fact *= i;
    s.coeffs[i] = 1.0 / std::sqrt(fact);
  }
  s.normalize_input = true;
  return s;
}

long long FeatureMapSpec::lifted_dim(int d) const {
  if (kind == MapKind::identity) return d;
  long long total = 0, block = 1;
  for (int i = 0; i <= degree; ++i) {
    total += block;
    block *= d;
    if (total > static_cast<long long>(2e6)) break;  // caller hits the apply guard anyway
  }
  return total;
}

std::vector<double> init_taylor_coeffs(int p) {
  std::vector<double> c(p + 1);
  double fact = 1.0;
  for (int i = 0; i <= p; ++i) {
    if (i > 0) fact *= i;
    c[i] = 1.0 / fact;
  }
  return c;
}

Vec apply_poly(const FeatureMapSpec& spec, const Vec& x) {
  if (spec.kind == MapKind::identity) return maybe_normalize(spec, x);

  const int d = static_cast<int>(x.size());
  if (std::pow(static_cast<double>(d), spec.degree) > 1e6)
    throw CapacityError("apply_poly: d^degree exceeds the desk-scale guard of 1e6");

  Vec z = maybe_normalize(spec, x);
  Vec out;
  out.reserve(static_cast<size_t>(spec.lifted_dim(d)));
  Vec block{1.0};  // z^{(x)i}, starting at degree 0
  for (int i = 0; i <= spec.degree; ++i) {
    for (double v : block) out.push_back(spec.coeffs[i] * v);
    if (i < spec.degree) block = kron(z, block);
  }
  return out;
}

double kernel_dot(const Vec& x, const Vec& y, const FeatureMapSpec& spec) {
  if (x.size() != y.size()) throw ShapeError("kernel_dot: dimension mismatch");
  Vec zx = maybe_normalize(spec, x);
  Vec zy = maybe_normalize(spec, y);
  double s = dot(zx, zy);
  if (spec.kind == MapKind::identity) return s;
  double acc = 0.0, sp = 1.0;
  for (int i = 0; i <= spec.degree; ++i) {
    acc += spec.coeffs[i] * spec.coeffs[i] * sp;
    sp *= s;
  }
  return acc;
}

}  // namespace memlab
