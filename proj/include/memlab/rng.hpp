#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "memlab/linalg.hpp"

namespace memlab {

/// Seeded generator with explicitly-coded distributions. std::mt19937_64 is
/// bit-exact by the standard; the library distributions are not, so uniform
/// and gaussian draws are implemented here to keep runs reproducible across
/// toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (two draws per call).
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Vec gaussian_vec(int n) {
    Vec v(n);
    for (double& x : v) x = gaussian();
    return v;
  }

  /// Gaussian direction projected to unit norm.
  Vec unit_vec(int n) {
    Vec v = gaussian_vec(n);
    double nm = norm2(v);
    if (nm == 0.0) {
      v[0] = 1.0;
      return v;
    }
    for (double& x : v) x /= nm;
    return v;
  }

  Mat gaussian_mat(int r, int c, double scale = 1.0) {
    Mat m(r, c);
    for (double& x : m.a) x = scale * gaussian();
    return m;
  }

  Mat uniform_mat(int r, int c, double lo, double hi) {
    Mat m(r, c);
    for (double& x : m.a) x = uniform(lo, hi);
    return m;
  }

  uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace memlab
