#include "memlab/attention.hpp"

#include <algorithm>
#include <cmath>

namespace memlab {

namespace {

void check_batch(const AttnBatch& b) {
  if (b.q.rows != b.k.rows || b.q.rows != b.v.rows)
    throw ShapeError("attention: q/k/v row counts differ");
  if (b.q.cols != b.k.cols) throw ShapeError("attention: q/k dims differ");
  if (b.q.rows < 1) throw ShapeError("attention: empty batch");
}

Mat windowed_softmax(const AttnBatch& b, int window) {
  check_batch(b);
  const int L = b.q.rows, d = b.q.cols, dv = b.v.cols;
  const double inv_scale = b.scale ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
  Mat y(L, dv);
  std::vector<double> logits(L);
  for (int i = 0; i < L; ++i) {
    int lo = window > 0 ? std::max(0, i - window + 1) : 0;
    double mx = -HUGE_VAL;
    for (int j = lo; j <= i; ++j) {
      double s = 0.0;
      for (int t = 0; t < d; ++t) s += b.q(i, t) * b.k(j, t);
      logits[j] = s * inv_scale;
      mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (int j = lo; j <= i; ++j) {
      logits[j] = std::exp(logits[j] - mx);
      z += logits[j];
    }
    for (int t = 0; t < dv; ++t) {
      double acc = 0.0;
      for (int j = lo; j <= i; ++j) acc += logits[j] * b.v(j, t);
      y(i, t) = acc / z;
    }
  }
  return y;
}

}  // namespace

Mat softmax_attention(const AttnBatch& batch) { return windowed_softmax(batch, 0); }

Mat sliding_window_attention(const AttnBatch& batch, int c) {
  if (c < 1) throw ShapeError("sliding_window_attention: window must be >= 1");
  return windowed_softmax(batch, c);
}

Mat unnormalized_exp_attention(const AttnBatch& batch) {
  check_batch(batch);
  const int L = batch.q.rows, d = batch.q.cols, dv = batch.v.cols;
  Mat y(L, dv);
  for (int i = 0; i < L; ++i) {
    for (int t = 0; t < dv; ++t) {
      double acc = 0.0;
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int u = 0; u < d; ++u) s += batch.q(i, u) * batch.k(j, u);
        acc += std::exp(s) * batch.v(j, t);
      }
      y(i, t) = acc;
    }
  }
  return y;
}

}  // namespace memlab
