// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cmath>
#include <vector>

#include "codial/errors.hpp"
#include "codial/models.hpp"
#include "codial/nn.hpp"
#include "codial/ops.hpp"
#include "codial/tensor.hpp"

namespace codial {

// Exponential ramp for the bottleneck weight: flat at start_value through
// start_epoch, geometric rise over ramp_epochs, flat at end_value after.
struct BetaSchedule {
  double start_value = 1e-6;
  double end_value = 1.0;
  int start_epoch = 10;
  int ramp_epochs = 100;
};

struct LossWeights {
  double lambda_cls = 1.0;
  double lambda_mi = 1.0;
};

inline double beta_at(const BetaSchedule& s, int epoch) {
  CODIAL_REQUIRE(s.start_value > 0.0 && s.start_value <= s.end_value,
                 ConfigError, "beta schedule needs 0 < start <= end");
  CODIAL_REQUIRE(s.ramp_epochs >= 0, ConfigError,
                 "beta ramp length must be nonnegative");
  CODIAL_REQUIRE(epoch >= 0, ConfigError, "epoch must be nonnegative");
  if (epoch <= s.start_epoch) return s.start_value;
  if (epoch >= s.start_epoch + s.ramp_epochs) return s.end_value;
  const double t = static_cast<double>(epoch - s.start_epoch) /
                   static_cast<double>(s.ramp_epochs);
  return s.start_value * std::pow(s.end_value / s.start_value, t);
}

// Mean cross-entropy over every transformed view of every image: with one
// logit row per view, the batch mean is exactly the double average.
template <typename T>
Tensor<T> cls_loss(const Tensor<T>& logits, const std::vector<int>& labels) {
  return softmax_cross_entropy(logits, labels);
}

// Training objective for the critic: mean(-softplus(-C_pos)) minus
// mean(softplus(C_neg)). Maximized during training; equals -2 ln 2 for a
// constant zero critic.
template <typename T>
Tensor<T> js_mi_objective(const Tensor<T>& pos_scores,
                          const Tensor<T>& neg_scores) {
  CODIAL_REQUIRE(pos_scores.numel() > 0, NoNegativesError,
                 "positive score set is empty");
  CODIAL_REQUIRE(neg_scores.numel() > 0, NoNegativesError,
                 "negative score set is empty");
  const Tensor<T> pos_term = mean(neg(softplus(neg(pos_scores))));
  const Tensor<T> neg_term = mean(softplus(neg_scores));
  return sub(pos_term, neg_term);
}

// Reported mutual-information estimate in nats: the positive-pair mean of
// the critic score. At the objective's optimal critic (the density log
// ratio) this converges to the true MI.
template <typename T>
T js_mi_estimate(const Tensor<T>& pos_scores) {
  CODIAL_REQUIRE(pos_scores.numel() > 0, NoNegativesError,
                 "positive score set is empty");
  T acc = T(0);
  for (const T v : pos_scores.values()) acc += v;
  return acc / static_cast<T>(pos_scores.numel());
}

// Symmetrized diagonal-Gaussian KL, averaged over batch rows:
// KL(N1 || N2) per coordinate =
//   (lv2 - lv1)/2 + (exp(lv1 - lv2) + (mu1 - mu2)^2 exp(-lv2))/2 - 1/2.
template <typename T>
Tensor<T> mib_regularizer(const GaussianRepr<T>& p, const GaussianRepr<T>& q) {
  if (p.mean.rank() != 2 || p.mean.shape() != q.mean.shape() ||
      p.logvar.shape() != q.logvar.shape() ||
      p.mean.shape() != p.logvar.shape()) {
    throw DimensionError("mib_regularizer: expected matching (B,D) Gaussians, got " +
                         shape_str(p.mean.shape()) + " vs " +
                         shape_str(q.mean.shape()));
  }
  const std::size_t batch = p.mean.dim(0);
  const Tensor<T> dmean = sub(p.mean, q.mean);
  const Tensor<T> dmean2 = mul(dmean, dmean);
  const auto kl_term = [&](const Tensor<T>& lv1, const Tensor<T>& lv2) {
    // (lv2 - lv1) + exp(lv1 - lv2) + dmean2 * exp(-lv2) - 1, halved below.
    Tensor<T> t = add(sub(lv2, lv1), exp(sub(lv1, lv2)));
    t = add(t, mul(dmean2, exp(neg(lv2))));
    return add_scalar(t, T(-1));
  };
  // Symmetrization: (KL(p||q) + KL(q||p)) / 2, each KL itself carrying the
  // inner 1/2, so the combined scale is 1/4 before the batch average.
  const Tensor<T> both =
      add(kl_term(p.logvar, q.logvar), kl_term(q.logvar, p.logvar));
  return mul_scalar(sum(both), T(1) / (T(4) * static_cast<T>(batch)));
}

// -mi + beta * reg: the bound is maximized while the bottleneck penalty
// is minimized.
template <typename T>
Tensor<T> mi_loss(const Tensor<T>& mi_bound, const Tensor<T>& reg, T beta_val) {
  return add(neg(mi_bound), mul_scalar(reg, beta_val));
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& cls, const Tensor<T>& mi,
                     const LossWeights& w) {
  CODIAL_REQUIRE(w.lambda_cls >= 0.0 && w.lambda_mi >= 0.0, ConfigError,
                 "loss weights must be nonnegative");
  return add(mul_scalar(cls, static_cast<T>(w.lambda_cls)),
             mul_scalar(mi, static_cast<T>(w.lambda_mi)));
}

}  // namespace codial
