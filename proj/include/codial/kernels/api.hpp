// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cstddef>

namespace codial::kernels {

// Table of low-level array kernels. Two implementations exist: a scalar
// reference and an AVX2(+FMA) variant; one is selected at startup (CPU
// detection, overridable via the CODIAL_KERNELS env var or set_active()).
// All matmuls ACCUMULATE into c; callers zero-fill when they need assignment.
struct Kernels {
  const char* name;

  // y += a * x
  void (*axpy_f32)(std::size_t n, float a, const float* x, float* y);
  void (*axpy_f64)(std::size_t n, double a, const double* x, double* y);

  float (*dot_f32)(std::size_t n, const float* x, const float* y);
  double (*dot_f64)(std::size_t n, const double* x, const double* y);

  // z = x op y, elementwise
  void (*add_f32)(std::size_t n, const float* x, const float* y, float* z);
  void (*add_f64)(std::size_t n, const double* x, const double* y, double* z);
  void (*sub_f32)(std::size_t n, const float* x, const float* y, float* z);
  void (*sub_f64)(std::size_t n, const double* x, const double* y, double* z);
  void (*mul_f32)(std::size_t n, const float* x, const float* y, float* z);
  void (*mul_f64)(std::size_t n, const double* x, const double* y, double* z);

  // y = a * x
  void (*scale_f32)(std::size_t n, float a, const float* x, float* y);
  void (*scale_f64)(std::size_t n, double a, const double* x, double* y);

  float (*sum_f32)(std::size_t n, const float* x);
  double (*sum_f64)(std::size_t n, const double* x);

  // y = max(x, 0)
  void (*relu_f32)(std::size_t n, const float* x, float* y);
  void (*relu_f64)(std::size_t n, const double* x, double* y);

  // c(M,N) += a(M,K) * b(K,N)
  void (*matmul_nn_f32)(std::size_t m, std::size_t k, std::size_t n,
                        const float* a, const float* b, float* c);
  void (*matmul_nn_f64)(std::size_t m, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c);
  // c(M,N) += a^T * b with a(K,M), b(K,N)
  void (*matmul_tn_f32)(std::size_t m, std::size_t k, std::size_t n,
                        const float* a, const float* b, float* c);
  void (*matmul_tn_f64)(std::size_t m, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c);
  // c(M,N) += a * b^T with a(M,K), b(N,K)
  void (*matmul_nt_f32)(std::size_t m, std::size_t k, std::size_t n,
                        const float* a, const float* b, float* c);
  void (*matmul_nt_f64)(std::size_t m, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c);
};

const Kernels& scalar_kernels();

// Present only when the binary was compiled with AVX2 support; check
// avx2_compiled() before calling.
const Kernels& avx2_kernels();
bool avx2_compiled();

// True when the running CPU supports AVX2 and the binary carries the variant.
bool avx2_available();

const Kernels& active();
void set_active(const Kernels& k);

// Typed helpers so templated code dispatches without spelling the suffix.
template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y);
template <typename T>
T dot(std::size_t n, const T* x, const T* y);
template <typename T>
void add(std::size_t n, const T* x, const T* y, T* z);
template <typename T>
void sub(std::size_t n, const T* x, const T* y, T* z);
template <typename T>
void mul(std::size_t n, const T* x, const T* y, T* z);
template <typename T>
void scale(std::size_t n, T a, const T* x, T* y);
template <typename T>
T sum(std::size_t n, const T* x);
template <typename T>
void relu(std::size_t n, const T* x, T* y);
template <typename T>
void matmul_nn(std::size_t m, std::size_t k, std::size_t n, const T* a,
               const T* b, T* c);
template <typename T>
void matmul_tn(std::size_t m, std::size_t k, std::size_t n, const T* a,
               const T* b, T* c);
template <typename T>
void matmul_nt(std::size_t m, std::size_t k, std::size_t n, const T* a,
               const T* b, T* c);

// clang-format off
template <> inline void axpy<float>(std::size_t n, float a, const float* x, float* y) { active().axpy_f32(n, a, x, y); }
template <> inline void axpy<double>(std::size_t n, double a, const double* x, double* y) { active().axpy_f64(n, a, x, y); }
template <> inline float dot<float>(std::size_t n, const float* x, const float* y) { return active().dot_f32(n, x, y); }
template <> inline double dot<double>(std::size_t n, const double* x, const double* y) { return active().dot_f64(n, x, y); }
template <> inline void add<float>(std::size_t n, const float* x, const float* y, float* z) { active().add_f32(n, x, y, z); }
template <> inline void add<double>(std::size_t n, const double* x, const double* y, double* z) { active().add_f64(n, x, y, z); }
template <> inline void sub<float>(std::size_t n, const float* x, const float* y, float* z) { active().sub_f32(n, x, y, z); }
template <> inline void sub<double>(std::size_t n, const double* x, const double* y, double* z) { active().sub_f64(n, x, y, z); }
template <> inline void mul<float>(std::size_t n, const float* x, const float* y, float* z) { active().mul_f32(n, x, y, z); }
template <> inline void mul<double>(std::size_t n, const double* x, const double* y, double* z) { active().mul_f64(n, x, y, z); }
template <> inline void scale<float>(std::size_t n, float a, const float* x, float* y) { active().scale_f32(n, a, x, y); }
template <> inline void scale<double>(std::size_t n, double a, const double* x, double* y) { active().scale_f64(n, a, x, y); }
template <> inline float sum<float>(std::size_t n, const float* x) { return active().sum_f32(n, x); }
template <> inline double sum<double>(std::size_t n, const double* x) { return active().sum_f64(n, x); }
template <> inline void relu<float>(std::size_t n, const float* x, float* y) { active().relu_f32(n, x, y); }
template <> inline void relu<double>(std::size_t n, const double* x, double* y) { active().relu_f64(n, x, y); }
template <> inline void matmul_nn<float>(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c) { active().matmul_nn_f32(m, k, n, a, b, c); }
template <> inline void matmul_nn<double>(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) { active().matmul_nn_f64(m, k, n, a, b, c); }
template <> inline void matmul_tn<float>(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c) { active().matmul_tn_f32(m, k, n, a, b, c); }
template <> inline void matmul_tn<double>(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) { active().matmul_tn_f64(m, k, n, a, b, c); }
template <> inline void matmul_nt<float>(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c) { active().matmul_nt_f32(m, k, n, a, b, c); }
template <> inline void matmul_nt<double>(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) { active().matmul_nt_f64(m, k, n, a, b, c); }
// clang-format on

}  // namespace codial::kernels
