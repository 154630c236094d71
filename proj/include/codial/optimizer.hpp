// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "codial/errors.hpp"
#include "codial/params.hpp"

namespace codial {

enum class OptMethod { kSgdMomentum, kAdam };

struct OptimizerConfig {
  OptMethod method = OptMethod::kAdam;
  double lr = 3e-4;
  double weight_decay = 0.0;  // classic L2: grad += wd * param
  double momentum = 0.9;      // sgd_momentum only
  double beta1 = 0.9;         // adam
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First-order optimizer over a ParamStore. Slot buffers are keyed by
// parameter name so state survives checkpoint round-trips exactly.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
    if (!(cfg.lr > 0)) throw ConfigError("optimizer: lr must be positive");
    if (cfg.weight_decay < 0)
      throw ConfigError("optimizer: weight_decay must be nonnegative");
  }

  const OptimizerConfig& config() const { return cfg_; }

  void step(ParamStore<T>& store) {
    ++step_count_;
    bool any_grad = false;
    // Parameters outside the current graph (e.g. a disabled loss branch)
    // have no gradient buffer and are left untouched.
    for (auto& e : store.params()) {
      if (!e.value.has_grad()) continue;
      any_grad = true;
      std::vector<T>& p = e.value.values_mut();
      const std::vector<T>& g0 = e.value.grad();
      if (cfg_.method == OptMethod::kAdam) {
        std::vector<T>& m = slot("m." + e.name, p.size());
        std::vector<T>& v = slot("v." + e.name, p.size());
        const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
        const T bc1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, step_count_));
        const T bc2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, step_count_));
        const T lr = static_cast<T>(cfg_.lr);
        const T eps = static_cast<T>(cfg_.eps);
        const T wd = static_cast<T>(cfg_.weight_decay);
        for (std::size_t i = 0; i < p.size(); ++i) {
          T g = g0[i] + wd * p[i];
          m[i] = b1 * m[i] + (T(1) - b1) * g;
          v[i] = b2 * v[i] + (T(1) - b2) * g * g;
          T mhat = m[i] / bc1;
          T vhat = v[i] / bc2;
          p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
      } else {
        std::vector<T>& vel = slot("vel." + e.name, p.size());
        const T mom = static_cast<T>(cfg_.momentum);
        const T lr = static_cast<T>(cfg_.lr);
        const T wd = static_cast<T>(cfg_.weight_decay);
        for (std::size_t i = 0; i < p.size(); ++i) {
          T g = g0[i] + wd * p[i];
          vel[i] = mom * vel[i] + g;
          p[i] -= lr * vel[i];
        }
      }
    }
    if (!any_grad)
      throw Error("optimizer: step with no gradients anywhere; "
                  "backward() was not run");
  }

  long long step_count() const { return step_count_; }
  void set_step_count(long long n) { step_count_ = n; }

  // Checkpoint access; iteration order is the key order (sorted).
  std::map<std::string, std::vector<T>>& slots() { return slots_; }
  const std::map<std::string, std::vector<T>>& slots() const { return slots_; }

 private:
  std::vector<T>& slot(const std::string& key, std::size_t size) {
    auto it = slots_.find(key);
    if (it == slots_.end())
      it = slots_.emplace(key, std::vector<T>(size, T(0))).first;
    if (it->second.size() != size)
      throw DimensionError("optimizer slot size mismatch for " + key);
    return it->second;
  }

  OptimizerConfig cfg_;
  long long step_count_ = 0;
  std::map<std::string, std::vector<T>> slots_;
};

}  // namespace codial
