// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#pragma once

#include <vector>

#include "codial/models.hpp"
#include "codial/tensor.hpp"

namespace codial {

struct ProbeConfig {
  int stage = -1;        // informational tag echoed into the report
  int pooled_dim = 1024;
  int epochs = 500;      // full-batch GD iteration cap
  double l2 = 1e-4;
  double lr = 0.5;
  unsigned seed = 0;
};

struct ProbeReport {
  int stage = -1;
  int pooled_dim = 0;
  double train_acc = 0;
  double test_acc = 0;
  int epochs_run = 0;
  unsigned seed = 0;
};

// Eval-mode forward up to conv stage `stage`, adaptively average-pooled to
// the square spatial size whose flattened length is the largest <= pooled_dim,
// then flattened to (N, s*s*C). Never writes gradients into the encoder.
template <typename T>
Tensor<T> extract_features(CodialModel<T>& model, const Tensor<T>& images,
                           int stage, int pooled_dim);

// L2-regularized multinomial logistic regression by full-batch gradient
// descent: stops at gradient norm < 1e-5 or cfg.epochs, reports held-out
// top-1 accuracy.
ProbeReport linear_probe(const Tensor<float>& train_x,
                         const std::vector<int>& train_y,
                         const Tensor<float>& test_x,
                         const std::vector<int>& test_y,
                         const ProbeConfig& cfg);

// Indices of the k most cosine-similar gallery rows, descending similarity,
// ties broken by ascending index. Zero-norm vectors compare at similarity 0.
std::vector<std::size_t> knn_retrieve(const std::vector<float>& query,
                                      const Tensor<float>& gallery, int k);

}  // namespace codial
