#include <doctest.h>

#include <cmath>

#include "memlab/linalg.hpp"
#include "memlab/rng.hpp"

using namespace memlab;

namespace {

// Independent naive oracle with the same left-to-right inner loop order.
Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

Mat random_mat(Rng& rng, int r, int c) { return rng.gaussian_mat(r, c); }

}  // namespace

TEST_CASE("matmul identity and hand-checked product") {
  Rng rng(7);
  Mat a = random_mat(rng, 3, 3);
  Mat i3 = Mat::identity(3);
  CHECK(max_abs_diff(matmul(i3, a), a) == 0.0);

  Mat x(2, 2, {1, 2, 3, 4});
  Mat y(2, 1, {0, 1});
  Mat p = matmul(x, y);
  CHECK(p(0, 0) == 2.0);
  CHECK(p(1, 0) == 4.0);
}

TEST_CASE("matmul matches the naive triple-loop oracle bit for bit") {
  Rng rng(11);
  Mat a = random_mat(rng, 8, 8);
  Mat b = random_mat(rng, 8, 8);
  CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) == 0.0);
}

TEST_CASE("matmul dimension mismatch throws") {
  Mat a(2, 3), b(2, 2);
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("matmul associativity within 1e-9 relative") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    Mat a = random_mat(rng, 5, 7), b = random_mat(rng, 7, 4), c = random_mat(rng, 4, 6);
    Mat left = matmul(matmul(a, b), c);
    Mat right = matmul(a, matmul(b, c));
    CHECK(frob_norm(sub(left, right)) <= 1e-9 * frob_norm(left));
  }
}

TEST_CASE("self_tensor scalar, basis vector, and kron oracle") {
  CHECK(self_tensor(Vec{2.0}, 3) == Vec{8.0});
  CHECK(self_tensor(Vec{1.0, 0.0}, 2) == Vec{1.0, 0.0, 0.0, 0.0});
  CHECK(self_tensor(Vec{1.5, -2.0}, 0) == Vec{1.0});

  Rng rng(3);
  Vec x = rng.gaussian_vec(2);
  // Explicit Kronecker oracle: [a^2, ab, ba, b^2].
  Vec expect{x[0] * x[0], x[0] * x[1], x[1] * x[0], x[1] * x[1]};
  CHECK(max_abs_diff(self_tensor(x, 2), expect) == 0.0);
}

TEST_CASE("self_tensor dimension law and desk guard") {
  Rng rng(5);
  for (int d = 1; d <= 6; ++d)
    for (int p = 0; p <= 3; ++p)
      CHECK(self_tensor(rng.gaussian_vec(d), p).size() == static_cast<size_t>(std::pow(d, p)));
  CHECK_THROWS_AS(self_tensor(Vec(40, 1.0), 4), CapacityError);
}

TEST_CASE("newton_schulz keeps a rotation and orthogonalizes it") {
  double th = 0.83;
  Mat rot(2, 2, {std::cos(th), -std::sin(th), std::sin(th), std::cos(th)});
  Mat ns = newton_schulz(rot, 10);
  Mat gram = matmul(transpose(ns), ns);
  CHECK(frob_norm(sub(gram, Mat::identity(2))) <= 1e-9);
  CHECK(max_abs_diff(ns, rot) <= 1e-9);
}

TEST_CASE("newton_schulz drives diag(3, 0.5) to the identity") {
  Mat s(2, 2, {3.0, 0.0, 0.0, 0.5});
  Mat ns = newton_schulz(s, 20);
  CHECK(max_abs_diff(ns, Mat::identity(2)) <= 1e-6);
}

TEST_CASE("newton_schulz converges to U V^T from the svd oracle") {
  Rng rng(17);
  Mat s = random_mat(rng, 6, 4);
  Mat ns = newton_schulz(s, 20);
  SvdResult svd = svd_oracle(s);
  Mat uv = matmul(svd.u, svd.vt);
  CHECK(frob_norm(sub(ns, uv)) <= 1e-5);
}

TEST_CASE("newton_schulz degenerate zero input and scale invariance") {
  Mat z(3, 2);
  CHECK(frob_norm(newton_schulz(z, 5)) == 0.0);

  Rng rng(19);
  Mat s = random_mat(rng, 4, 4);
  for (double c : {0.37, 2.0, 1e6}) {
    Mat scaled = scale(s, c);
    CHECK(max_abs_diff(newton_schulz(scaled, 8), newton_schulz(s, 8)) <= 1e-12);
  }
}

TEST_CASE("newton_schulz singular values land on 1 for full-rank inputs") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Mat s = random_mat(rng, 5, 5);
    SvdResult svd = svd_oracle(newton_schulz(s, 20));
    for (double sig : svd.sigma) CHECK(std::fabs(sig - 1.0) <= 1e-5);
  }
}

TEST_CASE("svd_oracle on diagonal and rank-1 inputs") {
  Mat d(2, 2, {2.0, 0.0, 0.0, 1.0});
  SvdResult s = svd_oracle(d);
  CHECK(s.sigma[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.sigma[1] == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(29);
  Vec u = rng.gaussian_vec(4), v = rng.gaussian_vec(3);
  SvdResult r1 = svd_oracle(outer(u, v));
  CHECK(r1.sigma[0] == doctest::Approx(norm2(u) * norm2(v)).epsilon(1e-12));
  CHECK(std::fabs(r1.sigma[1]) <= 1e-12 * r1.sigma[0]);
}

TEST_CASE("svd_oracle reconstructs and keeps orthonormal factors") {
  Rng rng(31);
  for (auto [r, c] : {std::pair{5, 3}, std::pair{3, 5}, std::pair{6, 6}}) {
    Mat a = random_mat(rng, r, c);
    SvdResult s = svd_oracle(a);
    int n = static_cast<int>(s.sigma.size());
    Mat sig(n, n);
    for (int i = 0; i < n; ++i) sig(i, i) = s.sigma[i];
    Mat rec = matmul(matmul(s.u, sig), s.vt);
    CHECK(frob_norm(sub(rec, a)) <= 1e-10 * frob_norm(a));
    CHECK(frob_norm(sub(matmul(transpose(s.u), s.u), Mat::identity(n))) <= 1e-10);
    CHECK(frob_norm(sub(matmul(s.vt, transpose(s.vt)), Mat::identity(n))) <= 1e-10);
    for (int i = 0; i + 1 < n; ++i) CHECK(s.sigma[i] >= s.sigma[i + 1]);
  }
}

TEST_CASE("svd_rank and pinv behave on deficient systems") {
  Rng rng(37);
  Vec u = rng.gaussian_vec(4), v = rng.gaussian_vec(4);
  Mat r1 = outer(u, v);
  CHECK(svd_rank(r1) == 1);

  Mat a = random_mat(rng, 4, 3);
  Mat p = pinv(a);
  // A pinv(A) A == A for any matrix.
  CHECK(frob_norm(sub(matmul(matmul(a, p), a), a)) <= 1e-10 * frob_norm(a));
}

TEST_CASE("public operations keep entries finite") {
  Rng rng(41);
  Mat a = random_mat(rng, 6, 5);
  CHECK(all_finite(a));
  CHECK(all_finite(newton_schulz(a, 12)));
  CHECK(all_finite(svd_oracle(a).u));
  CHECK(all_finite(self_tensor(rng.gaussian_vec(4), 3)));
}
