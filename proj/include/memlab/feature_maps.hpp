#pragma once

#include <vector>

#include "memlab/linalg.hpp"

namespace memlab {

enum class MapKind { identity, polynomial, exp_truncated };

/// Key/query feature lifting. The stacked convention concatenates one block
/// per degree: phi(x) = [a_0 * 1, a_1 * x, a_2 * x^{(x)2}, ..., a_p * x^{(x)p}],
/// so the lifted inner product separates as sum_i a_i^2 (x.y)^i.
///
/// - identity:       phi(x) = x (degree 1, a = (0, 1)).
/// - polynomial:     free coefficients a_0..a_p, Taylor-initialized a_i = 1/i!.
/// - exp_truncated:  fixed a_i = 1/sqrt(i!) up to degree P, so the lifted
///   inner product is the P-term Taylor sum of exp(x.y). Inputs are
///   normalized to unit length by default, which keeps |x.y| <= 1 and the
///   truncation remainder below e/(P+1)!.
struct FeatureMapSpec {
  MapKind kind = MapKind::identity;
  int degree = 1;
  std::vector<double> coeffs;  // a_0..a_degree
  bool normalize_input = false;

  static FeatureMapSpec identity();
  static FeatureMapSpec polynomial(int p);  // Taylor-initialized coefficients
  static FeatureMapSpec polynomial(int p, std::vector<double> coeffs);
  static FeatureMapSpec exp_truncated(int P);

  /// Output dimension of apply_poly for a d-dimensional input.
  long long lifted_dim(int d) const;
};

/// Taylor coefficients (1, 1, 1/2!, ..., 1/p!).
std::vector<double> init_taylor_coeffs(int p);

/// Materializes the lift. Throws CapacityError when d^degree exceeds the
/// desk-scale guard of 1e6 entries.
Vec apply_poly(const FeatureMapSpec& spec, const Vec& x);

/// phi(x)^T phi(y) in O(d * degree) via powers of x.y, never materializing
/// the lift. Equals dot(apply_poly(x), apply_poly(y)) up to roundoff.
double kernel_dot(const Vec& x, const Vec& y, const FeatureMapSpec& spec);

}  // namespace memlab
