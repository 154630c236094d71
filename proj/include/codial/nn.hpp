// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
//
// Neural-network layer ops. Layouts are channels-last: images (N,H,W,C),
// conv kernels (KH,KW,Cin,Cout), dense weights (Din,Dout).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "codial/ops.hpp"

namespace codial {

namespace detail {

struct ConvDims {
  std::size_t n, h, w, c;       // input
  std::size_t kh, kw, cout;     // kernel
  std::size_t stride, pad;
  std::size_t oh, ow;           // output spatial
  std::size_t rows() const { return n * oh * ow; }
  std::size_t patch() const { return kh * kw * c; }
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                   std::size_t pad) {
  if (x.rank() != 4 || w.rank() != 4) {
    throw DimensionError("conv2d: expected input (N,H,W,C) and kernel "
                         "(KH,KW,Cin,Cout), got " + shape_str(x.shape()) +
                         " and " + shape_str(w.shape()));
  }
  ConvDims d;
  d.n = x.dim(0); d.h = x.dim(1); d.w = x.dim(2); d.c = x.dim(3);
  d.kh = w.dim(0); d.kw = w.dim(1); d.cout = w.dim(3);
  d.stride = stride; d.pad = pad;
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  if (w.dim(2) != d.c) {
    throw DimensionError("conv2d: kernel channels " + shape_str(w.shape()) +
                         " do not match input " + shape_str(x.shape()));
  }
  if (d.kh > d.h + 2 * pad || d.kw > d.w + 2 * pad) {
    throw DimensionError("conv2d: kernel " + shape_str(w.shape()) +
                         " larger than padded input " + shape_str(x.shape()));
  }
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

// Patch matrix: row per output site, layout (kh, kw, c) with c contiguous.
// Out-of-bounds taps contribute zeros.
template <typename T>
void im2col(const T* x, const ConvDims& d, T* patches) {
  const std::size_t pc = d.patch();
  for (std::size_t img = 0; img < d.n; ++img) {
    const T* xim = x + img * d.h * d.w * d.c;
    for (std::size_t oy = 0; oy < d.oh; ++oy) {
      const std::ptrdiff_t ry0 =
          static_cast<std::ptrdiff_t>(oy * d.stride) - static_cast<std::ptrdiff_t>(d.pad);
      for (std::size_t ox = 0; ox < d.ow; ++ox) {
        const std::ptrdiff_t cx0 =
            static_cast<std::ptrdiff_t>(ox * d.stride) - static_cast<std::ptrdiff_t>(d.pad);
        T* prow = patches + ((img * d.oh + oy) * d.ow + ox) * pc;
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
          const std::ptrdiff_t ry = ry0 + static_cast<std::ptrdiff_t>(ky);
          for (std::size_t kx = 0; kx < d.kw; ++kx) {
            const std::ptrdiff_t cx = cx0 + static_cast<std::ptrdiff_t>(kx);
            T* dst = prow + (ky * d.kw + kx) * d.c;
            if (ry >= 0 && ry < static_cast<std::ptrdiff_t>(d.h) && cx >= 0 &&
                cx < static_cast<std::ptrdiff_t>(d.w)) {
              const T* src = xim + (static_cast<std::size_t>(ry) * d.w +
                                    static_cast<std::size_t>(cx)) * d.c;
              std::memcpy(dst, src, d.c * sizeof(T));
            } else {
              std::memset(dst, 0, d.c * sizeof(T));
            }
          }
        }
      }
    }
  }
}

// Scatter-add of patch gradients back onto the input grid.
template <typename T>
void col2im_acc(const T* patches, const ConvDims& d, T* dx) {
  const std::size_t pc = d.patch();
  for (std::size_t img = 0; img < d.n; ++img) {
    T* xim = dx + img * d.h * d.w * d.c;
    for (std::size_t oy = 0; oy < d.oh; ++oy) {
      const std::ptrdiff_t ry0 =
          static_cast<std::ptrdiff_t>(oy * d.stride) - static_cast<std::ptrdiff_t>(d.pad);
      for (std::size_t ox = 0; ox < d.ow; ++ox) {
        const std::ptrdiff_t cx0 =
            static_cast<std::ptrdiff_t>(ox * d.stride) - static_cast<std::ptrdiff_t>(d.pad);
        const T* prow = patches + ((img * d.oh + oy) * d.ow + ox) * pc;
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
          const std::ptrdiff_t ry = ry0 + static_cast<std::ptrdiff_t>(ky);
          if (ry < 0 || ry >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t kx = 0; kx < d.kw; ++kx) {
            const std::ptrdiff_t cx = cx0 + static_cast<std::ptrdiff_t>(kx);
            if (cx < 0 || cx >= static_cast<std::ptrdiff_t>(d.w)) continue;
            kernels::axpy(d.c, T(1), prow + (ky * d.kw + kx) * d.c,
                          xim + (static_cast<std::size_t>(ry) * d.w +
                                 static_cast<std::size_t>(cx)) * d.c);
          }
        }
      }
    }
  }
}

}  // namespace detail

// 2-D convolution via im2col + matmul. Patches are rebuilt in backward
// instead of being kept alive with the graph.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                 std::size_t pad) {
  const detail::ConvDims d = detail::conv_dims(x, w, stride, pad);
  std::vector<T> patches(d.rows() * d.patch());
  detail::im2col(x.values().data(), d, patches.data());
  std::vector<T> out(d.rows() * d.cout, T(0));
  kernels::matmul_nn(d.rows(), d.patch(), d.cout, patches.data(),
                     w.values().data(), out.data());
  return Tensor<T>::from_op(
      Shape{d.n, d.oh, d.ow, d.cout}, std::move(out), {x, w},
      [x, w, d](detail::Node<T>& nd) mutable {
        const T* g = nd.grad.data();
        std::vector<T> patches(d.rows() * d.patch());
        detail::im2col(x.values().data(), d, patches.data());
        if (w.requires_grad()) {
          // dW(P,Cout) += patches^T(P,rows) * G(rows,Cout)
          kernels::matmul_tn(d.patch(), d.rows(), d.cout, patches.data(), g,
                             w.node()->grad_data());
        }
        if (x.requires_grad()) {
          std::vector<T> dpatches(d.rows() * d.patch(), T(0));
          // dPatches(rows,P) += G(rows,Cout) * W^T(Cout,P)
          kernels::matmul_nt(d.rows(), d.cout, d.patch(), g, w.values().data(),
                             dpatches.data());
          detail::col2im_acc(dpatches.data(), d, x.node()->grad_data());
        }
      });
}

// x(B,Din) * w(Din,Dout) + b(Dout)
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw DimensionError("dense: incompatible shapes " + shape_str(x.shape()) +
                         " x " + shape_str(w.shape()));
  }
  return add_rowvec(matmul(x, w), b);
}

// Square-window max pooling, no padding. Ties keep the first (scan-order) max.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, std::size_t window,
                     std::size_t stride) {
  if (x.rank() != 4)
    throw DimensionError("max_pool2d: expected (N,H,W,C), got " + shape_str(x.shape()));
  if (window == 0 || stride == 0)
    throw ConfigError("max_pool2d: window and stride must be positive");
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (window > h || window > w) {
    throw DimensionError("max_pool2d: window exceeds input " + shape_str(x.shape()));
  }
  const std::size_t oh = (h - window) / stride + 1;
  const std::size_t ow = (w - window) / stride + 1;
  std::vector<T> out(n * oh * ow * c);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const T* xv = x.values().data();
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = ((img * h + oy * stride) * w + ox * stride) * c + ch;
          T bv = xv[best];
          for (std::size_t ky = 0; ky < window; ++ky) {
            for (std::size_t kx = 0; kx < window; ++kx) {
              std::size_t idx =
                  ((img * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
              if (xv[idx] > bv) { bv = xv[idx]; best = idx; }
            }
          }
          std::size_t oidx = ((img * oh + oy) * ow + ox) * c + ch;
          out[oidx] = bv;
          (*argmax)[oidx] = best;
        }
      }
    }
  }
  return Tensor<T>::from_op(Shape{n, oh, ow, c}, std::move(out), {x},
                            [x, argmax](detail::Node<T>& nd) mutable {
                              if (!x.requires_grad()) return;
                              T* gx = x.node()->grad_data();
                              const T* g = nd.grad.data();
                              for (std::size_t i = 0; i < nd.data.size(); ++i)
                                gx[(*argmax)[i]] += g[i];
                            });
}

// Adaptive average pooling to (oh, ow). Bin i covers rows
// [floor(i*H/oh), ceil((i+1)*H/oh)); every input cell lands in >= 1 bin.
template <typename T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, std::size_t oh, std::size_t ow) {
  if (x.rank() != 4)
    throw DimensionError("adaptive_avg_pool: expected (N,H,W,C), got " +
                         shape_str(x.shape()));
  if (oh == 0 || ow == 0)
    throw ConfigError("adaptive_avg_pool: output size must be positive");
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (oh > h || ow > w) {
    throw DimensionError("adaptive_avg_pool: output larger than input " +
                         shape_str(x.shape()));
  }
  auto lo = [](std::size_t i, std::size_t in, std::size_t out) {
    return (i * in) / out;
  };
  auto hi = [](std::size_t i, std::size_t in, std::size_t out) {
    return ((i + 1) * in + out - 1) / out;
  };
  std::vector<T> out(n * oh * ow * c, T(0));
  const T* xv = x.values().data();
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const std::size_t r0 = lo(oy, h, oh), r1 = hi(oy, h, oh);
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t c0 = lo(ox, w, ow), c1 = hi(ox, w, ow);
        const T inv = T(1) / static_cast<T>((r1 - r0) * (c1 - c0));
        T* orow = out.data() + ((img * oh + oy) * ow + ox) * c;
        for (std::size_t r = r0; r < r1; ++r)
          for (std::size_t cc = c0; cc < c1; ++cc)
            kernels::axpy(c, inv, xv + ((img * h + r) * w + cc) * c, orow);
      }
    }
  }
  return Tensor<T>::from_op(
      Shape{n, oh, ow, c}, std::move(out), {x},
      [x, oh, ow, h, w, c, n, lo, hi](detail::Node<T>& nd) mutable {
        if (!x.requires_grad()) return;
        T* gx = x.node()->grad_data();
        const T* g = nd.grad.data();
        for (std::size_t img = 0; img < n; ++img) {
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const std::size_t r0 = lo(oy, h, oh), r1 = hi(oy, h, oh);
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const std::size_t c0 = lo(ox, w, ow), c1 = hi(ox, w, ow);
              const T inv = T(1) / static_cast<T>((r1 - r0) * (c1 - c0));
              const T* grow = g + ((img * oh + oy) * ow + ox) * c;
              for (std::size_t r = r0; r < r1; ++r)
                for (std::size_t cc = c0; cc < c1; ++cc)
                  kernels::axpy(c, inv, grow, gx + ((img * h + r) * w + cc) * c);
            }
          }
        }
      });
}

// Running statistics of one batch-norm layer; plain buffers, checkpointed
// by name alongside parameters.
template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
};

// Channels-last batch norm over all leading dims. Train mode uses biased
// batch variance for normalization and tracks unbiased variance in the
// running buffers (momentum 0.1 by default).
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, BatchNormState<T>& state,
                     bool train, T momentum = T(0.1), T eps = T(1e-5)) {
  if (x.rank() < 2)
    throw DimensionError("batch_norm: expected rank >= 2, got " + shape_str(x.shape()));
  const std::size_t c = x.dim(x.rank() - 1);
  if (gamma.numel() != c || beta.numel() != c ||
      state.running_mean.size() != c || state.running_var.size() != c) {
    throw DimensionError("batch_norm: affine/stat size mismatch for " +
                         shape_str(x.shape()));
  }
  if (train && x.dim(0) < 2) {
    throw DegenerateBatchError("batch_norm: train-mode batch of " +
                               std::to_string(x.dim(0)));
  }
  const std::size_t rows = x.numel() / c;
  const T* xv = x.values().data();

  std::vector<T> mean_c(c, T(0)), var_c(c, T(0));
  if (train) {
    for (std::size_t r = 0; r < rows; ++r)
      kernels::axpy(c, T(1), xv + r * c, mean_c.data());
    for (std::size_t ch = 0; ch < c; ++ch) mean_c[ch] /= static_cast<T>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = xv + r * c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        T d = row[ch] - mean_c[ch];
        var_c[ch] += d * d;
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) var_c[ch] /= static_cast<T>(rows);
    const T unbias = rows > 1 ? static_cast<T>(rows) / static_cast<T>(rows - 1) : T(1);
    for (std::size_t ch = 0; ch < c; ++ch) {
      state.running_mean[ch] = (T(1) - momentum) * state.running_mean[ch] +
                               momentum * mean_c[ch];
      state.running_var[ch] = (T(1) - momentum) * state.running_var[ch] +
                              momentum * var_c[ch] * unbias;
    }
  } else {
    mean_c = state.running_mean;
    var_c = state.running_var;
  }

  auto inv_std = std::make_shared<std::vector<T>>(c);
  for (std::size_t ch = 0; ch < c; ++ch)
    (*inv_std)[ch] = T(1) / std::sqrt(var_c[ch] + eps);

  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  std::vector<T> out(x.numel());
  const T* gv = gamma.values().data();
  const T* bv = beta.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv + r * c;
    T* hrow = xhat->data() + r * c;
    T* orow = out.data() + r * c;
    for (std::size_t ch = 0; ch < c; ++ch) {
      hrow[ch] = (row[ch] - mean_c[ch]) * (*inv_std)[ch];
      orow[ch] = gv[ch] * hrow[ch] + bv[ch];
    }
  }

  return Tensor<T>::from_op(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, rows, c, train](detail::Node<T>& nd) mutable {
        const T* g = nd.grad.data();
        const T* gv = gamma.values().data();
        if (gamma.requires_grad()) {
          T* gg = gamma.node()->grad_data();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t ch = 0; ch < c; ++ch)
              gg[ch] += g[r * c + ch] * (*xhat)[r * c + ch];
        }
        if (beta.requires_grad()) {
          T* gb = beta.node()->grad_data();
          for (std::size_t r = 0; r < rows; ++r)
            kernels::axpy(c, T(1), g + r * c, gb);
        }
        if (!x.requires_grad()) return;
        T* gx = x.node()->grad_data();
        if (!train) {
          // Running stats are constants in eval mode.
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t ch = 0; ch < c; ++ch)
              gx[r * c + ch] += g[r * c + ch] * gv[ch] * (*inv_std)[ch];
          return;
        }
        std::vector<T> sum_dy(c, T(0)), sum_dy_xhat(c, T(0));
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            T dy = g[r * c + ch] * gv[ch];
            sum_dy[ch] += dy;
            sum_dy_xhat[ch] += dy * (*xhat)[r * c + ch];
          }
        }
        const T inv_rows = T(1) / static_cast<T>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            T dy = g[r * c + ch] * gv[ch];
            gx[r * c + ch] += (*inv_std)[ch] *
                (dy - inv_rows * sum_dy[ch] -
                 (*xhat)[r * c + ch] * inv_rows * sum_dy_xhat[ch]);
          }
        }
      });
}

// Mean cross-entropy over rows of logits(B,K) with integer labels.
// Stabilized with per-row max subtraction.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw DimensionError("softmax_cross_entropy: expected (B,K), got " +
                         shape_str(logits.shape()));
  const std::size_t b = logits.dim(0), k = logits.dim(1);
  if (labels.size() != b) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch " + std::to_string(b));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw LabelError("softmax_cross_entropy: label " + std::to_string(y) +
                       " outside [0," + std::to_string(k) + ")");
  }
  auto probs = std::make_shared<std::vector<T>>(logits.numel());
  const T* lv = logits.values().data();
  T loss = T(0);
  for (std::size_t r = 0; r < b; ++r) {
    const T* row = lv + r * k;
    T mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    T denom = T(0);
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
    T lse = mx + std::log(denom);
    for (std::size_t j = 0; j < k; ++j)
      (*probs)[r * k + j] = std::exp(row[j] - lse);
    loss += lse - row[labels[r]];
  }
  loss /= static_cast<T>(b);
  return Tensor<T>::from_op(
      Shape{}, {loss}, {logits},
      [logits, probs, labels, b, k](detail::Node<T>& nd) mutable {
        if (!logits.requires_grad()) return;
        const T g = nd.grad[0] / static_cast<T>(b);
        T* gl = logits.node()->grad_data();
        for (std::size_t r = 0; r < b; ++r) {
          for (std::size_t j = 0; j < k; ++j)
            gl[r * k + j] += g * (*probs)[r * k + j];
          gl[r * k + labels[r]] -= g;
        }
      });
}

}  // namespace codial
