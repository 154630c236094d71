// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "codial/tensor.hpp"

namespace codial {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-10);
}

// Central-difference gradient check. fn must be deterministic at the probed
// point (fixed noise, fixed masks). Returns the max relative error between
// the analytic gradient of fn(x) and (f(x+e) - f(x-e)) / 2e per coordinate.
template <typename T>
double finite_diff_gradcheck(
    const std::function<Tensor<T>(const Tensor<T>&)>& fn,
    const std::vector<T>& point, const Shape& shape, T eps = T(1e-4)) {
  Tensor<T> x(shape, point, /*requires_grad=*/true);
  Tensor<T> loss = fn(x);
  loss.backward();
  const std::vector<T> analytic = x.grad();

  double worst = 0.0;
  std::vector<T> probe = point;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const T orig = probe[i];
    probe[i] = orig + eps;
    Tensor<T> xp(shape, probe);
    const double fp = static_cast<double>(fn(xp).item());
    probe[i] = orig - eps;
    Tensor<T> xm(shape, probe);
    const double fm = static_cast<double>(fn(xm).item());
    probe[i] = orig;
    const double cd = (fp - fm) / (2.0 * static_cast<double>(eps));
    worst = std::max(worst, rel_err(static_cast<double>(analytic[i]), cd));
  }
  return worst;
}

// Gradcheck against an externally supplied value function, for whole-model
// losses: analytic comes from one backward pass, numeric from central
// differences of value_fn around the current parameter values.
template <typename T>
double finite_diff_gradcheck_values(
    const std::function<double()>& value_fn, std::vector<T>& param_data,
    const std::vector<T>& analytic, T eps = T(1e-4)) {
  double worst = 0.0;
  for (std::size_t i = 0; i < param_data.size(); ++i) {
    const T orig = param_data[i];
    param_data[i] = orig + eps;
    const double fp = value_fn();
    param_data[i] = orig - eps;
    const double fm = value_fn();
    param_data[i] = orig;
    const double cd = (fp - fm) / (2.0 * static_cast<double>(eps));
    worst = std::max(worst, rel_err(static_cast<double>(analytic[i]), cd));
  }
  return worst;
}

}  // namespace codial
