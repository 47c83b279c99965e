#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace memlab {

/// Shape mismatch between operands.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Requested object exceeds the desk-scale size guard.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit floats. All kernels in this library use a
/// fixed left-to-right summation order per output element so that repeated
/// runs are bit-stable.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major, rows*cols entries

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  Mat(int r, int c, std::vector<double> data);

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static Mat identity(int n);
  static Mat zeros(int r, int c);
};

// ---------------------------------------------------------------------------
// Elementary operations
// ---------------------------------------------------------------------------

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
Vec matvec(const Mat& m, const Vec& x);     // m * x
Vec matvec_t(const Mat& m, const Vec& x);   // m^T * x
Mat outer(const Vec& u, const Vec& v);      // u v^T

Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& m, double s);
/// y += s * x, in place.
void axpy(Mat& y, double s, const Mat& x);
void axpy(Vec& y, double s, const Vec& x);

double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);
double frob_norm(const Mat& m);
double max_abs_diff(const Mat& a, const Mat& b);
double max_abs_diff(const Vec& a, const Vec& b);

bool all_finite(const Mat& m);
bool all_finite(const Vec& x);

/// Kronecker product of two vectors, dimension |x|*|y|.
Vec kron(const Vec& x, const Vec& y);

/// p-fold self-tensoring x^{(x)p}, defined recursively as x (x) x^{(x)(p-1)}.
/// p = 0 returns the 1-dimensional vector [1]. Output dimension dim(x)^p;
/// throws CapacityError past the desk-scale guard of 10^6 entries.
Vec self_tensor(const Vec& x, int p);

// ---------------------------------------------------------------------------
// Newton-Schulz polar iteration
// ---------------------------------------------------------------------------

/// Coefficients of the odd matrix polynomial X <- a*X + b*X G + c*X G^2 with
/// G = X^T X. The default is the cubic polar iteration 1.5 X - 0.5 X X^T X,
/// which converges monotonically to the polar factor after Frobenius
/// prescaling. A quintic variant can be swapped in via (a, b, c).
struct NsCoeffs {
  double a = 1.5;
  double b = -0.5;
  double c = 0.0;
};

/// Iterates the Newton-Schulz polynomial k times on s / ||s||_F. For k large
/// the result approaches U V^T from the reduced SVD s = U S V^T (the nearest
/// semi-orthogonal matrix). A zero matrix maps to a zero matrix of the same
/// shape. The prescale makes the map scale-invariant: ns(c*s) == ns(s) for
/// any c > 0.
Mat newton_schulz(const Mat& s, int k, const NsCoeffs& coeffs = NsCoeffs{});

// ---------------------------------------------------------------------------
// SVD test oracle
// ---------------------------------------------------------------------------

struct SvdResult {
  Mat u;       // rows x r, orthonormal columns (r = min(rows, cols))
  Vec sigma;   // r singular values, non-increasing, non-negative
  Mat vt;      // r x cols, orthonormal rows
};

/// Reduced SVD via one-sided Jacobi rotations. Intended as a small-matrix
/// test oracle: min(rows, cols) must be <= 64. Reconstruction error is at
/// the level of a few ulps of ||a||_F. Columns of u paired with zero
/// singular values are left as zero vectors.
SvdResult svd_oracle(const Mat& a);

/// Numerical rank: number of singular values above tol * sigma_max
/// (tol defaults to a dimension-scaled machine epsilon).
int svd_rank(const Mat& a, double tol = -1.0);

/// Moore-Penrose pseudoinverse via svd_oracle, same size limits.
Mat pinv(const Mat& a, double tol = -1.0);

}  // namespace memlab
