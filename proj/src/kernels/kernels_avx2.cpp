// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
//
// AVX2+FMA kernels. Compiled only when the toolchain supports -mavx2 -mfma;
// dispatch.cpp additionally gates on runtime CPU support. Reductions and FMA
// contraction reorder roundoff relative to the scalar reference, so
// equivalence is defined up to tolerance, not bitwise.
#include "codial/kernels/api.hpp"

#if defined(CODIAL_HAVE_AVX2)

#include <immintrin.h>

namespace codial::kernels {

namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline double hsum4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

void axpy_f32_avx2(std::size_t n, float a, const float* x, float* y) {
  __m256 av = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
    _mm256_storeu_ps(y + i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_f64_avx2(std::size_t n, double a, const double* x, double* y) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

float dot_f32_avx2(std::size_t n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  }
  float total = hsum8(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double dot_f64_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double total = hsum4(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

void add_f32_avx2(std::size_t n, const float* x, const float* y, float* z) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(z + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void add_f64_avx2(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void sub_f32_avx2(std::size_t n, const float* x, const float* y, float* z) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(z + i, _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) z[i] = x[i] - y[i];
}

void sub_f64_avx2(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] - y[i];
}

void mul_f32_avx2(std::size_t n, const float* x, const float* y, float* z) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(z + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void mul_f64_avx2(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void scale_f32_avx2(std::size_t n, float a, const float* x, float* y) {
  __m256 av = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void scale_f64_avx2(std::size_t n, double a, const double* x, double* y) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

float sum_f32_avx2(std::size_t n, const float* x) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float total = hsum8(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double sum_f64_avx2(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum4(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

void relu_f32_avx2(std::size_t n, const float* x, float* y) {
  __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(zero, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_f64_avx2(std::size_t n, const double* x, double* y) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

// Row-major nn matmul: per output row, accumulate four a-coefficients per
// pass over the row of c to cut c load/store traffic.
void matmul_nn_f32_avx2(std::size_t m, std::size_t k, std::size_t n,
                        const float* a, const float* b, float* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      __m256 a0 = _mm256_set1_ps(arow[p]);
      __m256 a1 = _mm256_set1_ps(arow[p + 1]);
      __m256 a2 = _mm256_set1_ps(arow[p + 2]);
      __m256 a3 = _mm256_set1_ps(arow[p + 3]);
      const float* b0 = b + p * n;
      const float* b1 = b0 + n;
      const float* b2 = b1 + n;
      const float* b3 = b2 + n;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(a0, _mm256_loadu_ps(b0 + j), cv);
        cv = _mm256_fmadd_ps(a1, _mm256_loadu_ps(b1 + j), cv);
        cv = _mm256_fmadd_ps(a2, _mm256_loadu_ps(b2 + j), cv);
        cv = _mm256_fmadd_ps(a3, _mm256_loadu_ps(b3 + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      for (; j < n; ++j) {
        crow[j] += arow[p] * b0[j] + arow[p + 1] * b1[j] + arow[p + 2] * b2[j] +
                   arow[p + 3] * b3[j];
      }
    }
    for (; p < k; ++p) {
      __m256 av = _mm256_set1_ps(arow[p]);
      const float* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      for (; j < n; ++j) crow[j] += arow[p] * brow[j];
    }
  }
}

void matmul_nn_f64_avx2(std::size_t m, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      __m256d av = _mm256_set1_pd(arow[p]);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
        _mm256_storeu_pd(crow + j, cv);
      }
      for (; j < n; ++j) crow[j] += arow[p] * brow[j];
    }
  }
}

void matmul_tn_f32_avx2(std::size_t m, std::size_t k, std::size_t n,
                        const float* a, const float* b, float* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const float* arow = a + p * m;
    const float* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      __m256 av = _mm256_set1_ps(arow[i]);
      float* crow = c + i * n;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      for (; j < n; ++j) crow[j] += arow[i] * brow[j];
    }
  }
}

void matmul_tn_f64_avx2(std::size_t m, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      __m256d av = _mm256_set1_pd(arow[i]);
      double* crow = c + i * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
        _mm256_storeu_pd(crow + j, cv);
      }
      for (; j < n; ++j) crow[j] += arow[i] * brow[j];
    }
  }
}

void matmul_nt_f32_avx2(std::size_t m, std::size_t k, std::size_t n,
                        const float* a, const float* b, float* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j)
      crow[j] += dot_f32_avx2(k, arow, b + j * k);
  }
}

void matmul_nt_f64_avx2(std::size_t m, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j)
      crow[j] += dot_f64_avx2(k, arow, b + j * k);
  }
}

}  // namespace

const Kernels& avx2_kernels() {
  static const Kernels table = {
      "avx2",
      axpy_f32_avx2, axpy_f64_avx2,
      dot_f32_avx2, dot_f64_avx2,
      add_f32_avx2, add_f64_avx2,
      sub_f32_avx2, sub_f64_avx2,
      mul_f32_avx2, mul_f64_avx2,
      scale_f32_avx2, scale_f64_avx2,
      sum_f32_avx2, sum_f64_avx2,
      relu_f32_avx2, relu_f64_avx2,
      matmul_nn_f32_avx2, matmul_nn_f64_avx2,
      matmul_tn_f32_avx2, matmul_tn_f64_avx2,
      matmul_nt_f32_avx2, matmul_nt_f64_avx2,
  };
  return table;
}

bool avx2_compiled() { return true; }

}  // namespace codial::kernels

#else  // !CODIAL_HAVE_AVX2

namespace codial::kernels {

const Kernels& avx2_kernels() { return scalar_kernels(); }
bool avx2_compiled() { return false; }

}  // namespace codial::kernels

#endif
