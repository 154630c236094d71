// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cstdint>

namespace codial {

// Trains the critic on correlated scalar Gaussians where the true mutual
// information is known in closed form: I = -0.5 ln(1 - rho^2).
struct MiOracleConfig {
  double rho = 0.9;       // |rho| < 1
  int hidden = 64;        // critic MLP width (two hidden layers)
  int steps = 1500;
  int batch = 512;
  int eval_batch = 8192;
  double lr = 5e-4;
  std::uint64_t seed = 0;
};

struct MiOracleResult {
  double true_mi = 0.0;     // analytic value in nats
  double estimate = 0.0;    // positive-pair mean critic score, eval set
  double objective = 0.0;   // softplus bound value on the eval set
};

MiOracleResult train_mi_oracle(const MiOracleConfig& cfg);

}  // namespace codial
