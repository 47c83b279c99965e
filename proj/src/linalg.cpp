#include "memlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace memlab {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

constexpr double kSelfTensorGuard = 1e6;

}  // namespace

Mat::Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
  require(a.size() == static_cast<size_t>(r) * c, "Mat: data length must equal rows*cols");
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::zeros(int r, int c) { return Mat(r, c); }

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols == b.rows, "matmul: inner dimensions differ (" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + ")");
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Mat transpose(const Mat& m) {
  Mat out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

Vec matvec(const Mat& m, const Vec& x) {
  require(m.cols == static_cast<int>(x.size()), "matvec: dimension mismatch");
  Vec y(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < m.cols; ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Vec matvec_t(const Mat& m, const Vec& x) {
  require(m.rows == static_cast<int>(x.size()), "matvec_t: dimension mismatch");
  Vec y(m.cols, 0.0);
  for (int j = 0; j < m.cols; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m.rows; ++i) acc += m(i, j) * x[i];
    y[j] = acc;
  }
  return y;
}

Mat outer(const Vec& u, const Vec& v) {
  Mat out(static_cast<int>(u.size()), static_cast<int>(v.size()));
  for (size_t i = 0; i < u.size(); ++i)
    for (size_t j = 0; j < v.size(); ++j) out.a[i * v.size() + j] = u[i] * v[j];
  return out;
}

Mat add(const Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, "add: shape mismatch");
  Mat out = a;
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += b.a[i];
  return out;
}

Mat sub(const Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, "sub: shape mismatch");
  Mat out = a;
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] -= b.a[i];
  return out;
}

Mat scale(const Mat& m, double s) {
  Mat out = m;
  for (double& v : out.a) v *= s;
  return out;
}

void axpy(Mat& y, double s, const Mat& x) {
  require(y.rows == x.rows && y.cols == x.cols, "axpy: shape mismatch");
  for (size_t i = 0; i < y.a.size(); ++i) y.a[i] += s * x.a[i];
}

void axpy(Vec& y, double s, const Vec& x) {
  require(y.size() == x.size(), "axpy: dimension mismatch");
  for (size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

double dot(const Vec& x, const Vec& y) {
  require(x.size() == y.size(), "dot: dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

double frob_norm(const Mat& m) {
  double acc = 0.0;
  for (double v : m.a) acc += v * v;
  return std::sqrt(acc);
}

double max_abs_diff(const Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, "max_abs_diff: shape mismatch");
  double d = 0.0;
  for (size_t i = 0; i < a.a.size(); ++i) d = std::max(d, std::fabs(a.a[i] - b.a[i]));
  return d;
}

double max_abs_diff(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "max_abs_diff: dimension mismatch");
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

bool all_finite(const Mat& m) {
  return std::all_of(m.a.begin(), m.a.end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const Vec& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

Vec kron(const Vec& x, const Vec& y) {
  Vec out(x.size() * y.size());
  size_t idx = 0;
  for (double xv : x)
    for (double yv : y) out[idx++] = xv * yv;
  return out;
}

Vec self_tensor(const Vec& x, int p) {
  if (p < 0) throw ShapeError("self_tensor: degree must be >= 0");
  if (p == 0) return Vec{1.0};
  double d = static_cast<double>(x.size());
  if (std::pow(d, p) > kSelfTensorGuard)
    throw CapacityError("self_tensor: dim^p exceeds the desk-scale guard of 1e6");
  Vec out = x;
  for (int i = 1; i < p; ++i) out = kron(x, out);
  return out;
}

Mat newton_schulz(const Mat& s, int k, const NsCoeffs& coeffs) {
  require(k >= 1, "newton_schulz: need k >= 1");
  double n = frob_norm(s);
  if (n == 0.0) return Mat::zeros(s.rows, s.cols);  // degenerate case by definition
  Mat x = scale(s, 1.0 / n);
  for (int i = 0; i < k; ++i) {
    Mat g = matmul(transpose(x), x);  // cols x cols Gram
    Mat next = scale(x, coeffs.a);
    Mat xg = matmul(x, g);
    axpy(next, coeffs.b, xg);
    if (coeffs.c != 0.0) axpy(next, coeffs.c, matmul(xg, g));
    x = std::move(next);
  }
  return x;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD
// ---------------------------------------------------------------------------

namespace {

// Hestenes one-sided Jacobi on the columns of a (rows >= cols assumed by the
// caller). Rotations orthogonalize column pairs; v accumulates them.
SvdResult jacobi_svd_tall(const Mat& a) {
  const int m = a.rows, n = a.cols;
  Mat w = a;                  // working copy, columns become sigma_j * u_j
  Mat v = Mat::identity(n);

  const double eps = std::numeric_limits<double>::epsilon();
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          app += w(i, p) * w(i, p);
          aqq += w(i, q) * w(i, q);
          apq += w(i, p) * w(i, q);
        }
        if (std::fabs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        double zeta = (aqq - app) / (2.0 * apq);
        double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (int i = 0; i < m; ++i) {
          double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (int i = 0; i < n; ++i) {
          double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  // Column norms are the singular values; sort non-increasing.
  std::vector<int> order(n);
  Vec sigma(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += w(i, j) * w(i, j);
    sigma[j] = std::sqrt(acc);
    order[j] = j;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return sigma[x] > sigma[y]; });

  SvdResult out;
  out.u = Mat(m, n);
  out.sigma = Vec(n, 0.0);
  out.vt = Mat(n, n);
  for (int j = 0; j < n; ++j) {
    int src = order[j];
    out.sigma[j] = sigma[src];
    if (sigma[src] > 0.0) {
      for (int i = 0; i < m; ++i) out.u(i, j) = w(i, src) / sigma[src];
    }
    for (int i = 0; i < n; ++i) out.vt(j, i) = v(i, src);
  }
  return out;
}

}  // namespace

SvdResult svd_oracle(const Mat& a) {
  require(a.rows >= 1 && a.cols >= 1, "svd_oracle: empty matrix");
  if (std::min(a.rows, a.cols) > 64)
    throw CapacityError("svd_oracle: min(rows, cols) must be <= 64 (desk-scale oracle)");
  if (a.rows >= a.cols) return jacobi_svd_tall(a);
  // Wide case: svd(a^T) = (v, sigma, u^T), so swap factors back.
  SvdResult t = jacobi_svd_tall(transpose(a));
  SvdResult out;
  out.u = transpose(t.vt);
  out.sigma = t.sigma;
  out.vt = transpose(t.u);
  return out;
}

int svd_rank(const Mat& a, double tol) {
  SvdResult s = svd_oracle(a);
  if (s.sigma.empty() || s.sigma[0] == 0.0) return 0;
  if (tol < 0.0)
    tol = std::max(a.rows, a.cols) * std::numeric_limits<double>::epsilon() * 16.0;
  int r = 0;
  for (double v : s.sigma)
    if (v > tol * s.sigma[0]) ++r;
  return r;
}

Mat pinv(const Mat& a, double tol) {
  SvdResult s = svd_oracle(a);
  if (tol < 0.0)
    tol = std::max(a.rows, a.cols) * std::numeric_limits<double>::epsilon() * 16.0;
  double smax = s.sigma.empty() ? 0.0 : s.sigma[0];
  // pinv = V S^+ U^T
  int r = static_cast<int>(s.sigma.size());
  Mat vs(a.cols, r);  // V * S^+
  Mat vmat = transpose(s.vt);
  for (int i = 0; i < a.cols; ++i)
    for (int j = 0; j < r; ++j)
      vs(i, j) = (smax > 0.0 && s.sigma[j] > tol * smax) ? vmat(i, j) / s.sigma[j] : 0.0;
  return matmul(vs, transpose(s.u));
}

}  // namespace memlab
