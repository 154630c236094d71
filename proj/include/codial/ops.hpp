// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
//
// Elementwise, linear-algebra, shape and sampling ops on Tensor<T>.
// Every op builds its backward closure when grad mode is on.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "codial/errors.hpp"
#include "codial/kernels/api.hpp"
#include "codial/tensor.hpp"

namespace codial {

namespace detail {

template <typename T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                             const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  kernels::add(a.numel(), a.values().data(), b.values().data(), out.data());
  return Tensor<T>::from_op(a.shape(), std::move(out), {a, b},
                            [a, b](detail::Node<T>& n) mutable {
                              const T* g = n.grad.data();
                              if (a.requires_grad())
                                kernels::axpy(n.data.size(), T(1), g, a.node()->grad_data());
                              if (b.requires_grad())
                                kernels::axpy(n.data.size(), T(1), g, b.node()->grad_data());
                            });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  kernels::sub(a.numel(), a.values().data(), b.values().data(), out.data());
  return Tensor<T>::from_op(a.shape(), std::move(out), {a, b},
                            [a, b](detail::Node<T>& n) mutable {
                              const T* g = n.grad.data();
                              if (a.requires_grad())
                                kernels::axpy(n.data.size(), T(1), g, a.node()->grad_data());
                              if (b.requires_grad())
                                kernels::axpy(n.data.size(), T(-1), g, b.node()->grad_data());
                            });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  kernels::mul(a.numel(), a.values().data(), b.values().data(), out.data());
  return Tensor<T>::from_op(
      a.shape(), std::move(out), {a, b}, [a, b](detail::Node<T>& n) mutable {
        const std::size_t sz = n.data.size();
        const T* g = n.grad.data();
        if (a.requires_grad()) {
          T* ga = a.node()->grad_data();
          const T* bv = b.values().data();
          for (std::size_t i = 0; i < sz; ++i) ga[i] += g[i] * bv[i];
        }
        if (b.requires_grad()) {
          T* gb = b.node()->grad_data();
          const T* av = a.values().data();
          for (std::size_t i = 0; i < sz; ++i) gb[i] += g[i] * av[i];
        }
      });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  std::vector<T> out(a.numel());
  kernels::scale(a.numel(), c, a.values().data(), out.data());
  return Tensor<T>::from_op(a.shape(), std::move(out), {a},
                            [a, c](detail::Node<T>& n) mutable {
                              if (a.requires_grad())
                                kernels::axpy(n.data.size(), c, n.grad.data(),
                                              a.node()->grad_data());
                            });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  std::vector<T> out(a.values());
  for (auto& v : out) v += c;
  return Tensor<T>::from_op(a.shape(), std::move(out), {a},
                            [a](detail::Node<T>& n) mutable {
                              if (a.requires_grad())
                                kernels::axpy(n.data.size(), T(1), n.grad.data(),
                                              a.node()->grad_data());
                            });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return mul_scalar(a, T(-1));
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  const T* av = a.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  return Tensor<T>::from_op(a.shape(), std::move(out), {a},
                            [a](detail::Node<T>& n) mutable {
                              if (!a.requires_grad()) return;
                              T* ga = a.node()->grad_data();
                              const T* g = n.grad.data();
                              const T* y = n.data.data();
                              for (std::size_t i = 0; i < n.data.size(); ++i)
                                ga[i] += g[i] * y[i];
                            });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  const T* av = a.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(av[i] > T(0)))
      throw NumericError("log: non-positive input " + std::to_string(av[i]));
    out[i] = std::log(av[i]);
  }
  return Tensor<T>::from_op(a.shape(), std::move(out), {a},
                            [a](detail::Node<T>& n) mutable {
                              if (!a.requires_grad()) return;
                              T* ga = a.node()->grad_data();
                              const T* g = n.grad.data();
                              const T* x = a.values().data();
                              for (std::size_t i = 0; i < n.data.size(); ++i)
                                ga[i] += g[i] / x[i];
                            });
}

// Overflow-safe: softplus(x) = max(x, 0) + log1p(exp(-|x|)).
template <typename T>
inline T softplus_value(T x) {
  T m = x > T(0) ? x : T(0);
  return m + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  const T* av = a.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus_value(av[i]);
  return Tensor<T>::from_op(
      a.shape(), std::move(out), {a}, [a](detail::Node<T>& n) mutable {
        if (!a.requires_grad()) return;
        T* ga = a.node()->grad_data();
        const T* g = n.grad.data();
        const T* x = a.values().data();
        for (std::size_t i = 0; i < n.data.size(); ++i) {
          // sigmoid(x), computed from the negative side to avoid overflow
          T s = x[i] >= T(0) ? T(1) / (T(1) + std::exp(-x[i]))
                             : std::exp(x[i]) / (T(1) + std::exp(x[i]));
          ga[i] += g[i] * s;
        }
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  kernels::relu(a.numel(), a.values().data(), out.data());
  return Tensor<T>::from_op(a.shape(), std::move(out), {a},
                            [a](detail::Node<T>& n) mutable {
                              if (!a.requires_grad()) return;
                              T* ga = a.node()->grad_data();
                              const T* g = n.grad.data();
                              const T* x = a.values().data();
                              for (std::size_t i = 0; i < n.data.size(); ++i)
                                if (x[i] > T(0)) ga[i] += g[i];
                            });
}

// Gradient passes inside [lo, hi] and is zero where the value was clipped.
template <typename T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  if (!(lo <= hi)) throw ConfigError("clamp: lo > hi");
  std::vector<T> out(a.numel());
  const T* av = a.values().data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = av[i] < lo ? lo : (av[i] > hi ? hi : av[i]);
  return Tensor<T>::from_op(a.shape(), std::move(out), {a},
                            [a, lo, hi](detail::Node<T>& n) mutable {
                              if (!a.requires_grad()) return;
                              T* ga = a.node()->grad_data();
                              const T* g = n.grad.data();
                              const T* x = a.values().data();
                              for (std::size_t i = 0; i < n.data.size(); ++i)
                                if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
                            });
}

// x(R,C) + v(C) broadcast over rows.
template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& v) {
  if (x.rank() != 2 || v.rank() != 1 || x.dim(1) != v.dim(0)) {
    throw DimensionError("add_rowvec: expected (R,C)+(C), got " +
                         shape_str(x.shape()) + " and " + shape_str(v.shape()));
  }
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  std::vector<T> out(x.numel());
  const T* xv = x.values().data();
  const T* vv = v.values().data();
  for (std::size_t r = 0; r < rows; ++r)
    kernels::add(cols, xv + r * cols, vv, out.data() + r * cols);
  return Tensor<T>::from_op(
      x.shape(), std::move(out), {x, v},
      [x, v, rows, cols](detail::Node<T>& n) mutable {
        const T* g = n.grad.data();
        if (x.requires_grad())
          kernels::axpy(rows * cols, T(1), g, x.node()->grad_data());
        if (v.requires_grad()) {
          T* gv = v.node()->grad_data();
          for (std::size_t r = 0; r < rows; ++r)
            kernels::axpy(cols, T(1), g + r * cols, gv);
        }
      });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n, T(0));
  kernels::matmul_nn(m, k, n, a.values().data(), b.values().data(), out.data());
  return Tensor<T>::from_op(
      Shape{m, n}, std::move(out), {a, b},
      [a, b, m, k, n](detail::Node<T>& nd) mutable {
        const T* g = nd.grad.data();
        if (a.requires_grad()) {
          // dA(M,K) += G(M,N) * B^T, B is (K,N)
          kernels::matmul_nt(m, n, k, g, b.values().data(), a.node()->grad_data());
        }
        if (b.requires_grad()) {
          // dB(K,N) += A^T * G, A is (M,K)
          kernels::matmul_tn(k, m, n, a.values().data(), g, b.node()->grad_data());
        }
      });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
  if (shape_numel(new_shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) +
                         " as " + shape_str(new_shape));
  }
  std::vector<T> out(a.values());
  return Tensor<T>::from_op(std::move(new_shape), std::move(out), {a},
                            [a](detail::Node<T>& n) mutable {
                              if (a.requires_grad())
                                kernels::axpy(n.data.size(), T(1), n.grad.data(),
                                              a.node()->grad_data());
                            });
}

// Column concatenation of two (R, Ci) matrices.
template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DimensionError("concat_cols: row mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
  const std::size_t rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  std::vector<T> out(rows * (ca + cb));
  const T* av = a.values().data();
  const T* bv = b.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(av + r * ca, av + (r + 1) * ca, out.begin() + r * (ca + cb));
    std::copy(bv + r * cb, bv + (r + 1) * cb, out.begin() + r * (ca + cb) + ca);
  }
  return Tensor<T>::from_op(
      Shape{rows, ca + cb}, std::move(out), {a, b},
      [a, b, rows, ca, cb](detail::Node<T>& n) mutable {
        const T* g = n.grad.data();
        if (a.requires_grad()) {
          T* ga = a.node()->grad_data();
          for (std::size_t r = 0; r < rows; ++r)
            kernels::axpy(ca, T(1), g + r * (ca + cb), ga + r * ca);
        }
        if (b.requires_grad()) {
          T* gb = b.node()->grad_data();
          for (std::size_t r = 0; r < rows; ++r)
            kernels::axpy(cb, T(1), g + r * (ca + cb) + ca, gb + r * cb);
        }
      });
}

// Row selection with repetition allowed; backward scatter-adds.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<std::size_t> indices) {
  if (x.rank() != 2) {
    throw DimensionError("gather_rows: expected matrix, got " +
                         shape_str(x.shape()));
  }
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  for (std::size_t idx : indices) {
    if (idx >= rows)
      throw DimensionError("gather_rows: index " + std::to_string(idx) +
                           " out of range for " + std::to_string(rows) + " rows");
  }
  const std::size_t picked = indices.size();
  std::vector<T> out(picked * cols);
  const T* xv = x.values().data();
  for (std::size_t p = 0; p < picked; ++p)
    std::copy(xv + indices[p] * cols, xv + (indices[p] + 1) * cols,
              out.begin() + p * cols);
  return Tensor<T>::from_op(
      Shape{picked, cols}, std::move(out), {x},
      [x, idx = std::move(indices), cols](detail::Node<T>& n) mutable {
        if (!x.requires_grad()) return;
        T* gx = x.node()->grad_data();
        const T* g = n.grad.data();
        for (std::size_t p = 0; p < idx.size(); ++p)
          kernels::axpy(cols, T(1), g + p * cols, gx + idx[p] * cols);
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = kernels::sum(a.numel(), a.values().data());
  return Tensor<T>::from_op(Shape{}, {total}, {a},
                            [a](detail::Node<T>& n) mutable {
                              if (!a.requires_grad()) return;
                              T g = n.grad[0];
                              T* ga = a.node()->grad_data();
                              for (std::size_t i = 0; i < a.numel(); ++i)
                                ga[i] += g;
                            });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.numel() == 0) throw DimensionError("mean: empty tensor");
  return mul_scalar(sum(a), T(1) / static_cast<T>(a.numel()));
}

// out = mean + exp(0.5 * logvar) * noise; noise is a grad-free sample.
template <typename T>
Tensor<T> reparam(const Tensor<T>& mean_t, const Tensor<T>& logvar_t,
                  const Tensor<T>& noise) {
  detail::check_same_shape(mean_t, logvar_t, "reparam");
  detail::check_same_shape(mean_t, noise, "reparam");
  const std::size_t sz = mean_t.numel();
  std::vector<T> out(sz);
  const T* mv = mean_t.values().data();
  const T* lv = logvar_t.values().data();
  const T* nv = noise.values().data();
  for (std::size_t i = 0; i < sz; ++i)
    out[i] = mv[i] + std::exp(T(0.5) * lv[i]) * nv[i];
  return Tensor<T>::from_op(
      mean_t.shape(), std::move(out), {mean_t, logvar_t},
      [mean_t, logvar_t, noise](detail::Node<T>& n) mutable {
        const T* g = n.grad.data();
        if (mean_t.requires_grad())
          kernels::axpy(n.data.size(), T(1), g, mean_t.node()->grad_data());
        if (logvar_t.requires_grad()) {
          T* gl = logvar_t.node()->grad_data();
          const T* lv = logvar_t.values().data();
          const T* nv = noise.values().data();
          for (std::size_t i = 0; i < n.data.size(); ++i)
            gl[i] += g[i] * nv[i] * T(0.5) * std::exp(T(0.5) * lv[i]);
        }
      });
}

}  // namespace codial
