#include <doctest.h>

#include <cmath>

#include "memlab/objectives.hpp"
#include "memlab/rng.hpp"

using namespace memlab;

namespace {

MemoryState random_matrix_memory(int out, int in, uint64_t seed) {
  MemoryState m = init_memory(MemoryArch::matrix, MemoryDims{in, out}, seed);
  Rng rng(seed + 1);
  m.weights[0] = rng.gaussian_mat(out, in);
  return m;
}

std::vector<KvPair> random_window(Rng& rng, int n, int d) {
  std::vector<KvPair> w;
  for (int i = 0; i < n; ++i) w.push_back({rng.gaussian_vec(d), rng.gaussian_vec(d)});
  return w;
}

}  // namespace

TEST_CASE("c = 1 window equals the single-pair l2 gradient") {
  MemoryState m = random_matrix_memory(4, 4, 3);
  Rng rng(5);
  KvPair pair{rng.gaussian_vec(4), rng.gaussian_vec(4)};
  WindowLoss wl{1, {1.0}, LossBase::l2};
  std::vector<KvPair> window{pair};
  LossGrad win = omega_loss_grad(m, window, wl);
  LossGrad single = grad_l2(m, pair.phi_k, pair.v);
  CHECK(win.loss == single.loss);
  CHECK(max_abs_diff(win.g.weights[0], single.g.weights[0]) == 0.0);
}

TEST_CASE("all-zero gammas prune the whole window") {
  MemoryState m = random_matrix_memory(4, 4, 7);
  Rng rng(9);
  std::vector<KvPair> window = random_window(rng, 3, 4);
  WindowLoss wl{3, {0.0, 0.0, 0.0}, LossBase::l2};
  LossGrad lg = omega_loss_grad(m, window, wl);
  CHECK(lg.loss == 0.0);
  CHECK(grads_max_abs(lg.g) == 0.0);
}

TEST_CASE("empty window yields zero loss and gradient") {
  MemoryState m = random_matrix_memory(3, 3, 11);
  WindowLoss wl{4, {1.0, 1.0, 1.0, 1.0}, LossBase::l2};
  LossGrad lg = omega_loss_grad(m, std::vector<KvPair>{}, wl);
  CHECK(lg.loss == 0.0);
  CHECK(grads_max_abs(lg.g) == 0.0);
}

TEST_CASE("window gradient is the gamma-weighted sum of per-pair gradients") {
  MemoryState m = init_memory(MemoryArch::mlp2, MemoryDims{4, 4, 6}, 13);
  Rng rng(17);
  std::vector<KvPair> window = random_window(rng, 3, 4);
  WindowLoss wl{3, {0.7, 0.2, 0.9}, LossBase::l2};
  LossGrad lg = omega_loss_grad(m, window, wl);

  GradState expect = zero_grads_like(m);
  double expect_loss = 0.0;
  for (int j = 0; j < 3; ++j) {
    LossGrad single = grad_l2(m, window[j].phi_k, window[j].v);
    expect_loss += wl.gammas[j] * single.loss;
    grads_axpy(expect, wl.gammas[j], single.g);
  }
  CHECK(lg.loss == doctest::Approx(expect_loss).epsilon(1e-14));
  for (size_t w = 0; w < expect.weights.size(); ++w)
    CHECK(max_abs_diff(lg.g.weights[w], expect.weights[w]) <= 1e-14);
}

TEST_CASE("short windows at sequence start align gammas to the newest token") {
  MemoryState m = random_matrix_memory(3, 3, 19);
  Rng rng(23);
  std::vector<KvPair> window = random_window(rng, 2, 3);
  // c = 4: the two present pairs take gamma indices 2 and 3 (newest last).
  WindowLoss wl{4, {0.9, 0.8, 0.3, 0.5}, LossBase::l2};
  LossGrad lg = omega_loss_grad(m, window, wl);
  LossGrad a = grad_l2(m, window[0].phi_k, window[0].v);
  LossGrad b = grad_l2(m, window[1].phi_k, window[1].v);
  CHECK(lg.loss == doctest::Approx(0.3 * a.loss + 0.5 * b.loss).epsilon(1e-14));
}

TEST_CASE("additivity over disjoint windows") {
  MemoryState m = random_matrix_memory(4, 4, 29);
  Rng rng(31);
  std::vector<KvPair> w1 = random_window(rng, 2, 4);
  std::vector<KvPair> w2 = random_window(rng, 2, 4);
  std::vector<KvPair> joint = w1;
  joint.insert(joint.end(), w2.begin(), w2.end());

  WindowLoss wl4{4, {1.0, 1.0, 1.0, 1.0}, LossBase::l2};
  WindowLoss wl2{2, {1.0, 1.0}, LossBase::l2};
  LossGrad all = omega_loss_grad(m, joint, wl4);
  LossGrad p1 = omega_loss_grad(m, w1, wl2);
  LossGrad p2 = omega_loss_grad(m, w2, wl2);
  CHECK(all.loss == doctest::Approx(p1.loss + p2.loss).epsilon(1e-14));
  GradState sum = p1.g;
  grads_axpy(sum, 1.0, p2.g);
  CHECK(max_abs_diff(all.g.weights[0], sum.weights[0]) <= 1e-14);
}

TEST_CASE("scaling every gamma scales loss and gradient exactly") {
  MemoryState m = random_matrix_memory(4, 4, 37);
  Rng rng(41);
  std::vector<KvPair> window = random_window(rng, 3, 4);
  WindowLoss base{3, {0.5, 1.0, 0.25}, LossBase::l2};
  WindowLoss scaled{3, {0.25, 0.5, 0.125}, LossBase::l2};
  LossGrad lb = omega_loss_grad(m, window, base);
  LossGrad ls = omega_loss_grad(m, window, scaled);
  CHECK(ls.loss == doctest::Approx(0.5 * lb.loss).epsilon(1e-14));
  for (size_t i = 0; i < lb.g.weights[0].a.size(); ++i)
    CHECK(ls.g.weights[0].a[i] == doctest::Approx(0.5 * lb.g.weights[0].a[i]).epsilon(1e-12));
}

TEST_CASE("dot base windows aggregate grad_dot terms") {
  MemoryState m = random_matrix_memory(3, 3, 43);
  Rng rng(47);
  std::vector<KvPair> window = random_window(rng, 2, 3);
  WindowLoss wl{2, {0.6, 0.4}, LossBase::dot};
  LossGrad lg = omega_loss_grad(m, window, wl);
  Mat expect = outer(window[0].v, window[0].phi_k);
  for (double& x : expect.a) x *= 0.6;
  axpy(expect, 0.4, outer(window[1].v, window[1].phi_k));
  CHECK(max_abs_diff(lg.g.weights[0], expect) <= 1e-14);
}

TEST_CASE("window longer than c or wrong gamma count is rejected") {
  MemoryState m = random_matrix_memory(3, 3, 53);
  Rng rng(59);
  std::vector<KvPair> window = random_window(rng, 3, 3);
  CHECK_THROWS_AS(omega_loss_grad(m, window, WindowLoss{2, {1.0, 1.0}, LossBase::l2}),
                  ShapeError);
  CHECK_THROWS_AS(omega_loss_grad(m, window, WindowLoss{3, {1.0, 1.0}, LossBase::l2}),
                  ShapeError);
}
