// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <string>
#include <vector>

#include "codial/errors.hpp"
#include "codial/tensor.hpp"

namespace codial {

// Registry of named trainable parameters and named non-trainable state
// buffers (batch-norm running stats). Names are unique and enumeration
// order is creation order, which fixes checkpoint blob order.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
  };

  Tensor<T> create(const std::string& name, Shape shape, std::vector<T> data) {
    if (find(name) != nullptr)
      throw ConfigError("duplicate parameter name: " + name);
    Tensor<T> t(std::move(shape), std::move(data), /*requires_grad=*/true);
    params_.push_back({name, t});
    return t;
  }

  // State buffers (running stats) live outside the autodiff graph; the
  // model owns them at stable addresses and registers them here so the
  // checkpoint writer can enumerate them in order.
  void register_state(const std::string& name, std::vector<T>* buf) {
    if (find_state(name) != nullptr)
      throw ConfigError("duplicate state name: " + name);
    state_.push_back({name, buf});
  }

  std::vector<Entry>& params() { return params_; }
  const std::vector<Entry>& params() const { return params_; }

  Tensor<T>* find(const std::string& name) {
    for (auto& e : params_)
      if (e.name == name) return &e.value;
    return nullptr;
  }

  std::vector<T>* find_state(const std::string& name) {
    for (auto& e : state_)
      if (e.name == name) return e.buf;
    return nullptr;
  }

  struct StateEntry {
    std::string name;
    std::vector<T>* buf;
  };
  std::vector<StateEntry>& state() { return state_; }
  const std::vector<StateEntry>& state() const { return state_; }

  std::size_t param_count() const { return params_.size(); }

  std::size_t param_scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : params_) n += e.value.numel();
    return n;
  }

  void zero_grad() {
    for (auto& e : params_) e.value.zero_grad();
  }

 private:
  std::vector<Entry> params_;
  std::vector<StateEntry> state_;
};

}  // namespace codial
