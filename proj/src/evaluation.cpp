// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#include "codial/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "codial/errors.hpp"
#include "codial/nn.hpp"
#include "codial/ops.hpp"

namespace codial {
namespace {

double top1_accuracy(const Tensor<double>& logits, const std::vector<int>& y) {
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  const std::vector<double>& lv = logits.values();
  long correct = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (lv[r * classes + c] > lv[r * classes + best]) best = c;
    if (static_cast<int>(best) == y[r]) ++correct;
  }
  return rows == 0 ? 0.0 : static_cast<double>(correct) / rows;
}

Tensor<double> to_double(const Tensor<float>& x) {
  std::vector<double> v(x.values().begin(), x.values().end());
  return Tensor<double>(x.shape(), std::move(v));
}

}  // namespace

template <typename T>
Tensor<T> extract_features(CodialModel<T>& model, const Tensor<T>& images,
                           int stage, int pooled_dim) {
  const int stage_count =
      static_cast<int>(model.config().encoder.stages.size());
  if (stage < 0 || stage >= stage_count)
    throw ConfigError("extract_features: stage " + std::to_string(stage) +
                      " out of [0, " + std::to_string(stage_count) + ")");
  if (pooled_dim < 1)
    throw ConfigError("extract_features: pooled_dim must be positive");
  NoGradGuard no_grad;
  EncodeResult<T> enc = model.encode(images, /*train=*/false);
  const Tensor<T>& act = enc.stages[static_cast<std::size_t>(stage)];
  const std::size_t h = act.dim(1), channels = act.dim(3);
  // Largest square output whose flattened length fits in pooled_dim.
  std::size_t side = static_cast<std::size_t>(
      std::sqrt(static_cast<double>(pooled_dim) / static_cast<double>(channels)));
  side = std::min(side, h);
  if (side < 1)
    throw ConfigError("extract_features: pooled_dim " +
                      std::to_string(pooled_dim) + " cannot fit " +
                      std::to_string(channels) + " channels");
  Tensor<T> pooled = adaptive_avg_pool(act, side, side);
  return reshape(pooled, {act.dim(0), side * side * channels});
}

ProbeReport linear_probe(const Tensor<float>& train_x,
                         const std::vector<int>& train_y,
                         const Tensor<float>& test_x,
                         const std::vector<int>& test_y,
                         const ProbeConfig& cfg) {
  if (train_x.rank() != 2 || test_x.rank() != 2)
    throw DimensionError("linear_probe: features must be rank-2");
  if (train_x.dim(1) != test_x.dim(1))
    throw DimensionError("linear_probe: train dim " +
                         std::to_string(train_x.dim(1)) + " != test dim " +
                         std::to_string(test_x.dim(1)));
  if (train_x.dim(0) != train_y.size() || test_x.dim(0) != test_y.size())
    throw DimensionError("linear_probe: feature/label row mismatch");
  if (cfg.epochs < 1) throw ConfigError("linear_probe: epochs must be >= 1");
  if (cfg.l2 < 0) throw ConfigError("linear_probe: l2 must be nonnegative");

  std::set<int> distinct(train_y.begin(), train_y.end());
  if (distinct.size() < 2)
    throw DegenerateLabelsError("linear_probe: need at least 2 classes, got " +
                                std::to_string(distinct.size()));
  const int classes = *distinct.rbegin() + 1;
  if (*distinct.begin() < 0)
    throw LabelError("linear_probe: negative label");
  for (int y : test_y)
    if (y < 0 || y >= classes)
      throw LabelError("linear_probe: test label " + std::to_string(y) +
                       " outside train classes");

  const std::size_t dim = train_x.dim(1);
  Tensor<double> x = to_double(train_x);
  Tensor<double> xt = to_double(test_x);
  {
    // Standardize with train statistics: an affine reparameterization that
    // leaves the optimum unchanged but conditions full-batch GD.
    const std::size_t rows = x.dim(0);
    std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
    const std::vector<double>& xv = x.values();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < dim; ++c) mean[c] += xv[r * dim + c];
    for (double& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = xv[r * dim + c] - mean[c];
        scale[c] += d * d;
      }
    for (double& s : scale) {
      s = std::sqrt(s / static_cast<double>(rows));
      if (s < 1e-12) s = 1.0;  // constant feature: centering alone suffices
    }
    auto standardize = [&](Tensor<double>& t) {
      std::vector<double>& v = t.values_mut();
      const std::size_t n = t.dim(0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < dim; ++c)
          v[r * dim + c] = (v[r * dim + c] - mean[c]) / scale[c];
    };
    standardize(x);
    standardize(xt);
  }
  // Convex objective: zero init is deterministic and unbiased.
  Tensor<double> w(Shape{dim, static_cast<std::size_t>(classes)},
                   std::vector<double>(dim * classes, 0.0),
                   /*requires_grad=*/true);
  Tensor<double> b(Shape{static_cast<std::size_t>(classes)},
                   std::vector<double>(classes, 0.0),
                   /*requires_grad=*/true);

  int epochs_run = 0;
  for (int it = 0; it < cfg.epochs; ++it) {
    w.zero_grad();
    b.zero_grad();
    Tensor<double> logits = dense(x, w, b);
    Tensor<double> loss = softmax_cross_entropy(logits, train_y);
    if (cfg.l2 > 0)
      loss = add(loss, mul_scalar(sum(mul(w, w)), cfg.l2));
    loss.backward();
    ++epochs_run;
    double sq = 0;
    for (double g : w.grad()) sq += g * g;
    for (double g : b.grad()) sq += g * g;
    if (std::sqrt(sq) < 1e-5) break;
    std::vector<double>& wv = w.values_mut();
    const std::vector<double>& wg = w.grad();
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= cfg.lr * wg[i];
    std::vector<double>& bv = b.values_mut();
    const std::vector<double>& bg = b.grad();
    for (std::size_t i = 0; i < bv.size(); ++i) bv[i] -= cfg.lr * bg[i];
  }

  ProbeReport rep;
  rep.stage = cfg.stage;
  rep.pooled_dim = static_cast<int>(dim);
  rep.seed = cfg.seed;
  rep.epochs_run = epochs_run;
  {
    NoGradGuard no_grad;
    rep.train_acc = top1_accuracy(dense(x, w, b), train_y);
    rep.test_acc = top1_accuracy(dense(xt, w, b), test_y);
  }
  return rep;
}

std::vector<std::size_t> knn_retrieve(const std::vector<float>& query,
                                      const Tensor<float>& gallery, int k) {
  if (gallery.rank() != 2)
    throw DimensionError("knn_retrieve: gallery must be rank-2");
  const std::size_t rows = gallery.dim(0), dim = gallery.dim(1);
  if (rows == 0) throw ConfigError("knn_retrieve: gallery is empty");
  if (query.size() != dim)
    throw DimensionError("knn_retrieve: query dim " +
                         std::to_string(query.size()) + " != gallery dim " +
                         std::to_string(dim));
  if (k < 1 || static_cast<std::size_t>(k) > rows)
    throw ConfigError("knn_retrieve: k must be in [1, " +
                      std::to_string(rows) + "]");

  double qnorm = 0;
  for (float v : query) qnorm += static_cast<double>(v) * v;
  qnorm = std::sqrt(qnorm);
  const std::vector<float>& gv = gallery.values();
  std::vector<std::pair<double, std::size_t>> scored(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0, gnorm = 0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double g = gv[r * dim + c];
      dot += g * static_cast<double>(query[c]);
      gnorm += g * g;
    }
    gnorm = std::sqrt(gnorm);
    const double sim =
        (qnorm == 0.0 || gnorm == 0.0) ? 0.0 : dot / (qnorm * gnorm);
    scored[r] = {sim, r};
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = scored[i].second;
  return out;
}

template Tensor<float> extract_features<float>(CodialModel<float>&,
                                               const Tensor<float>&, int, int);
template Tensor<double> extract_features<double>(CodialModel<double>&,
                                                 const Tensor<double>&, int,
                                                 int);

}  // namespace codial
