// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
//
// Reference kernels: straightforward loops, no intrinsics. These define the
// semantics the SIMD variants are tested against.
#include "codial/kernels/api.hpp"

namespace codial::kernels {

namespace {

template <typename T>
void axpy_ref(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot_ref(std::size_t n, const T* x, const T* y) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void add_ref(std::size_t n, const T* x, const T* y, T* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

template <typename T>
void sub_ref(std::size_t n, const T* x, const T* y, T* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - y[i];
}

template <typename T>
void mul_ref(std::size_t n, const T* x, const T* y, T* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

template <typename T>
void scale_ref(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

template <typename T>
T sum_ref(std::size_t n, const T* x) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename T>
void relu_ref(std::size_t n, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void matmul_nn_ref(std::size_t m, std::size_t k, std::size_t n, const T* a,
                   const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_tn_ref(std::size_t m, std::size_t k, std::size_t n, const T* a,
                   const T* b, T* c) {
  // c[i,j] += sum_p a[p,i] * b[p,j]
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      T av = arow[i];
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_nt_ref(std::size_t m, std::size_t k, std::size_t n, const T* a,
                   const T* b, T* c) {
  // c[i,j] += dot(a[i,:], b[j,:])
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table = {
      "scalar",
      axpy_ref<float>, axpy_ref<double>,
      dot_ref<float>, dot_ref<double>,
      add_ref<float>, add_ref<double>,
      sub_ref<float>, sub_ref<double>,
      mul_ref<float>, mul_ref<double>,
      scale_ref<float>, scale_ref<double>,
      sum_ref<float>, sum_ref<double>,
      relu_ref<float>, relu_ref<double>,
      matmul_nn_ref<float>, matmul_nn_ref<double>,
      matmul_tn_ref<float>, matmul_tn_ref<double>,
      matmul_nt_ref<float>, matmul_nt_ref<double>,
  };
  return table;
}

}  // namespace codial::kernels
