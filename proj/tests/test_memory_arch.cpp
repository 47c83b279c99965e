#include <doctest.h>

#include <cmath>
#include <functional>

#include "memlab/memory_arch.hpp"
#include "memlab/rng.hpp"

using namespace memlab;

namespace {

// Central finite differences over every weight entry.
double max_fd_rel_error(MemoryState m, const Vec& k, const Vec& v,
                        const std::function<double(const MemoryState&)>& loss_of,
                        const GradState& analytic, double h = 1e-5) {
  double worst = 0.0;
  for (size_t w = 0; w < m.weights.size(); ++w) {
    for (size_t i = 0; i < m.weights[w].a.size(); ++i) {
      double saved = m.weights[w].a[i];
      m.weights[w].a[i] = saved + h;
      double up = loss_of(m);
      m.weights[w].a[i] = saved - h;
      double dn = loss_of(m);
      m.weights[w].a[i] = saved;
      double fd = (up - dn) / (2.0 * h);
      double a = analytic.weights[w].a[i];
      worst = std::max(worst, std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-3}));
    }
  }
  (void)k;
  (void)v;
  return worst;
}

MemoryState random_memory(MemoryArch arch, int in, int out, uint64_t seed, int hidden = 0,
                          int blocks = 1) {
  MemoryState m = init_memory(arch, MemoryDims{in, out, hidden, blocks}, seed);
  if (arch == MemoryArch::matrix) {
    Rng rng(seed + 1);
    m.weights[0] = rng.gaussian_mat(out, in);
  }
  return m;
}

}  // namespace

TEST_CASE("matrix forward is the plain product; identity maps x to x") {
  MemoryState m = init_memory(MemoryArch::matrix, MemoryDims{3, 3}, 0);
  m.weights[0] = Mat::identity(3);
  Vec x{1.0, -2.0, 0.5};
  CHECK(forward(m, x) == x);
}

TEST_CASE("mlp2 with W1 = 0 is the exact identity") {
  MemoryState m = random_memory(MemoryArch::mlp2, 5, 5, 3);
  for (double& v : m.weights[0].a) v = 0.0;
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Vec x = rng.gaussian_vec(5);
    CHECK(max_abs_diff(forward(m, x), x) == 0.0);
    // grad_l2 then reduces to the plain l2 distance.
    Vec v = rng.gaussian_vec(5);
    Vec r = x;
    axpy(r, -1.0, v);
    CHECK(grad_l2(m, x, v).loss == doctest::Approx(dot(r, r)).epsilon(1e-14));
  }
}

TEST_CASE("mlp2 forward matches an independent reference evaluation") {
  MemoryState m = random_memory(MemoryArch::mlp2, 4, 4, 11);
  Rng rng(13);
  Vec x = rng.gaussian_vec(4);
  // Hand-rolled: x + W1 gelu(W2 x) with the same tanh-approximation constants.
  const Mat& w1 = m.weights[0];
  const Mat& w2 = m.weights[1];
  Vec pre(w2.rows, 0.0);
  for (int i = 0; i < w2.rows; ++i)
    for (int j = 0; j < w2.cols; ++j) pre[i] += w2(i, j) * x[j];
  Vec act(pre.size());
  for (size_t i = 0; i < pre.size(); ++i) {
    double t = std::tanh(std::sqrt(2.0 / M_PI) * (pre[i] + 0.044715 * std::pow(pre[i], 3)));
    act[i] = 0.5 * pre[i] * (1.0 + t);
  }
  Vec expect = x;
  for (int i = 0; i < w1.rows; ++i)
    for (int j = 0; j < w1.cols; ++j) expect[i] += w1(i, j) * act[j];
  CHECK(max_abs_diff(forward(m, x), expect) <= 1e-15);
}

TEST_CASE("interpolation point has zero loss and zero gradient") {
  MemoryState m = random_memory(MemoryArch::mlp2, 4, 4, 17);
  Rng rng(19);
  Vec k = rng.gaussian_vec(4);
  Vec v = forward(m, k);
  LossGrad lg = grad_l2(m, k, v);
  CHECK(lg.loss <= 1e-24);
  CHECK(grads_max_abs(lg.g) <= 1e-11);
}

TEST_CASE("matrix l2 gradient has the closed form 2(W phi - v) phi^T") {
  MemoryState m = random_memory(MemoryArch::matrix, 2, 2, 23);
  Rng rng(29);
  Vec phi = rng.gaussian_vec(2), v = rng.gaussian_vec(2);
  LossGrad lg = grad_l2(m, phi, v);
  Vec r = matvec(m.weights[0], phi);
  axpy(r, -1.0, v);
  Mat expect = outer(r, phi);
  for (double& x : expect.a) x *= 2.0;
  CHECK(max_abs_diff(lg.g.weights[0], expect) <= 1e-14);
}

TEST_CASE("matrix dot gradient reproduces the outer-product update") {
  MemoryState m = random_memory(MemoryArch::matrix, 3, 3, 31);
  Rng rng(37);
  Vec phi = rng.gaussian_vec(3), v = rng.gaussian_vec(3);
  LossGrad lg = grad_dot(m, phi, v);
  CHECK(max_abs_diff(lg.g.weights[0], outer(v, phi)) == 0.0);
  // v = 0: zero loss, zero gradient.
  LossGrad z = grad_dot(m, phi, Vec(3, 0.0));
  CHECK(z.loss == 0.0);
  CHECK(grads_max_abs(z.g) == 0.0);
}

TEST_CASE("analytic gradients match central finite differences on every arch") {
  struct Case {
    MemoryArch arch;
    int in, out, hidden, blocks;
  };
  const Case cases[] = {
      {MemoryArch::matrix, 5, 4, 0, 1},   {MemoryArch::mlp2, 4, 4, 6, 1},
      {MemoryArch::gated_mlp, 4, 4, 6, 1}, {MemoryArch::stackL, 3, 3, 5, 3},
      {MemoryArch::mlp2, 7, 4, 6, 1},  // lifted input through the W0 projection
  };
  Rng rng(41);
  for (const Case& c : cases) {
    for (int rep = 0; rep < 3; ++rep) {
      MemoryState m = random_memory(c.arch, c.in, c.out, 100 * rep + 7, c.hidden, c.blocks);
      Vec k = rng.gaussian_vec(c.in), v = rng.gaussian_vec(c.out);

      LossGrad l2 = grad_l2(m, k, v);
      double worst_l2 = max_fd_rel_error(
          m, k, v, [&](const MemoryState& s) { return grad_l2(s, k, v).loss; }, l2.g);
      CHECK(worst_l2 <= 1e-5);

      LossGrad dt = grad_dot(m, k, v);
      double worst_dot = max_fd_rel_error(
          m, k, v, [&](const MemoryState& s) { return grad_dot(s, k, v).loss; }, dt.g);
      CHECK(worst_dot <= 1e-5);
    }
  }
}

TEST_CASE("silu activation gradients also pass finite differences") {
  MemoryState m = init_memory(MemoryArch::gated_mlp, MemoryDims{4, 4, 6, 1}, 51,
                              Activation::silu);
  Rng rng(53);
  Vec k = rng.gaussian_vec(4), v = rng.gaussian_vec(4);
  LossGrad lg = grad_l2(m, k, v);
  double worst = max_fd_rel_error(
      m, k, v, [&](const MemoryState& s) { return grad_l2(s, k, v).loss; }, lg.g);
  CHECK(worst <= 1e-5);
}

TEST_CASE("init_memory conventions") {
  MemoryState zero = init_memory(MemoryArch::matrix, MemoryDims{4, 4}, 99);
  CHECK(frob_norm(zero.weights[0]) == 0.0);  // empty memory retrieves 0

  MemoryState a = init_memory(MemoryArch::mlp2, MemoryDims{8, 8}, 5);
  MemoryState b = init_memory(MemoryArch::mlp2, MemoryDims{8, 8}, 5);
  for (size_t i = 0; i < a.weights.size(); ++i)
    CHECK(max_abs_diff(a.weights[i], b.weights[i]) == 0.0);

  // Near-identity at init: ||forward(x) - x|| <= ||W1||_F ||act(W2 x)||.
  Rng rng(61);
  Vec x = rng.gaussian_vec(8);
  Vec pre = matvec(a.weights[1], x);
  for (double& v : pre) v = activation_eval(a.act, v);
  Vec diff = forward(a, x);
  axpy(diff, -1.0, x);
  CHECK(norm2(diff) <= frob_norm(a.weights[0]) * norm2(pre) + 1e-12);
}

TEST_CASE("matrix architecture is linear") {
  MemoryState m = random_memory(MemoryArch::matrix, 5, 3, 67);
  Rng rng(71);
  Vec x = rng.gaussian_vec(5), y = rng.gaussian_vec(5);
  double a = 0.3, b = -1.7;
  Vec combo(5);
  for (int i = 0; i < 5; ++i) combo[i] = a * x[i] + b * y[i];
  Vec lhs = forward(m, combo);
  Vec fx = forward(m, x), fy = forward(m, y);
  Vec rhs(3);
  for (int i = 0; i < 3; ++i) rhs[i] = a * fx[i] + b * fy[i];
  CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("shape errors on mismatched inputs") {
  MemoryState m = random_memory(MemoryArch::matrix, 4, 4, 73);
  CHECK_THROWS_AS(forward(m, Vec(3, 0.0)), ShapeError);
  CHECK_THROWS_AS(grad_l2(m, Vec(4, 0.0), Vec(5, 0.0)), ShapeError);
}
