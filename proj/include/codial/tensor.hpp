// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "codial/errors.hpp"

namespace codial {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << ")";
  return os.str();
}

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // allocated lazily during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;  // reads this->grad, accumulates parents

  // Grad buffer always matches the value shape once touched.
  T* grad_data() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

// Thread-local switch: when off, ops produce leaves with no graph edges.
// Used for eval-mode forwards (feature extraction, metrics).
inline thread_local bool grad_enabled = true;

}  // namespace detail

// RAII guard that disables graph construction in its scope.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline bool grad_mode_enabled() { return detail::grad_enabled; }

// Dense row-major tensor with reverse-mode autodiff. Copies share the
// underlying node (shallow), matching define-by-run graph semantics.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false) {
    if (shape_numel(shape) != data.size()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    }
    node_ = std::make_shared<detail::Node<T>>();
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> d(shape_numel(shape), T(0));
    return Tensor(std::move(shape), std::move(d), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    std::vector<T> d(shape_numel(shape), value);
    return Tensor(std::move(shape), std::move(d), requires_grad);
  }

  static Tensor scalar(T value) { return Tensor(Shape{}, {value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->data.size(); }

  const std::vector<T>& values() const { return node_->data; }
  // In-place mutation is for leaves (parameter updates between steps);
  // mutating an op output after backward-graph capture is a logic error.
  std::vector<T>& values_mut() { return node_->data; }

  T item() const {
    if (numel() != 1) {
      throw RankError("item() requires a scalar tensor, got shape " +
                      shape_str(node_->shape));
    }
    return node_->data[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    node_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<T>& grad() const {
    if (node_->grad.empty()) throw Error("tensor has no gradient buffer");
    return node_->grad;
  }
  // Drops the buffer entirely so has_grad() reports whether a backward pass
  // actually reached this tensor since the last reset.
  void zero_grad() { node_->grad.clear(); }

  // Reverse-mode sweep from a scalar. Every requires_grad node reachable
  // through parent edges ends up with a grad buffer of its own shape.
  void backward() {
    if (numel() != 1) {
      throw RankError("backward() requires a scalar loss, got shape " +
                      shape_str(node_->shape));
    }
    using NodeT = detail::Node<T>;
    std::vector<NodeT*> order;
    std::unordered_set<NodeT*> seen;
    // Iterative postorder DFS; order holds parents before children.
    std::vector<std::pair<NodeT*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        NodeT* p = n->parents[idx].get();
        ++idx;
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    for (NodeT* n : order) n->grad_data();
    node_->grad.assign(1, T(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->backward_fn) (*it)->backward_fn();
    }
  }

  std::shared_ptr<detail::Node<T>> node() const { return node_; }

  // Builds an op result. bwd receives the result node (grad populated) and
  // is responsible for accumulating into the parents captured by the op.
  static Tensor from_op(Shape shape, std::vector<T> data,
                        std::vector<Tensor> parents,
                        std::function<void(detail::Node<T>&)> bwd) {
    Tensor out(std::move(shape), std::move(data));
    if (!detail::grad_enabled) return out;
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (!needs) return out;
    out.node_->requires_grad = true;
    for (const auto& p : parents) out.node_->parents.push_back(p.node());
    detail::Node<T>* raw = out.node_.get();
    out.node_->backward_fn = [raw, f = std::move(bwd)]() { f(*raw); };
    return out;
  }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

}  // namespace codial
