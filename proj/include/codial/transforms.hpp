// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "codial/image.hpp"
#include "codial/rng.hpp"

namespace codial {

// Auxiliary augmentation knobs. Each view draws its own auxiliary chain;
// the flip is drawn once per source image.
struct AuxConfig {
  int out_size = 64;
  double flip_prob = 0.5;
  int boundary_px = 2;  // margin trimmed from the source before sampling
  bool enable_crop = true;
  double crop_area_lo = 0.08;
  double crop_area_hi = 1.0;
  double crop_aspect_lo = 0.75;
  double crop_aspect_hi = 4.0 / 3.0;
  bool enable_jitter = true;
  double jitter_lo = 0.5;
  double jitter_hi = 1.5;
  bool enable_blur = false;
  double blur_kernel_frac = 0.1;
  double blur_sigma_lo = 0.1;
  double blur_sigma_hi = 2.0;
  double warp_max_frac = 0.1;  // offset bound d as a fraction of min(H, W)
  int warp_grid = 4;           // control points per side
};

// Dense per-pixel displacement field, bilinearly interpolated from a
// regular grid of random control offsets. |dr|,|dc| <= max_offset = d.
struct WarpField {
  std::size_t height = 0;
  std::size_t width = 0;
  float max_offset = 0.0f;
  std::vector<float> dr;  // (H, W)
  std::vector<float> dc;

  static WarpField random(std::size_t h, std::size_t w, double max_frac,
                          int grid, RngStream& rng);
  static WarpField constant(std::size_t h, std::size_t w, float dr, float dc);
};

// Quarter-turn rotation, counter-clockwise; source (r,c) maps to
// destination (W-1-c, r). Exact index permutation, no resampling.
Image rotate90(const Image& img, int quarter_turns);

Image hflip(const Image& img);

// out(r,c) = in(r + dr(r,c), c + dc(r,c)), bilinear with reflect padding,
// result clamped to [0,1].
Image warp(const Image& img, const WarpField& field);

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w);

// Crop-rectangle sampling only (no pixel work): area uniform, aspect
// log-uniform, up to 10 attempts, center-square fallback.
struct CropRect {
  std::size_t top, left, height, width;
};
CropRect sample_crop_rect(std::size_t img_h, std::size_t img_w, double area_lo,
                          double area_hi, double aspect_lo, double aspect_hi,
                          RngStream& rng);

// Random resized crop; rectangle always fully inside the source, then
// resized to (out_h, out_w).
Image random_crop(const Image& img, double area_lo, double area_hi,
                  double aspect_lo, double aspect_hi, std::size_t out_h,
                  std::size_t out_w, RngStream& rng);

// Jitter sub-operations, applied in a random order by color_jitter.
enum class JitterOp : int { kBrightness = 0, kContrast = 1, kSaturation = 2, kHue = 3 };

// Deterministic core: factors indexed by JitterOp, applied in the given
// order. Hue maps factor f to a rotation of (f-1)*180 degrees. On
// single-channel images only brightness/contrast apply.
Image color_jitter_ordered(const Image& img, const std::array<double, 4>& factors,
                           const std::vector<int>& order);

// Brightness / contrast / saturation / hue factors sampled in [lo, hi],
// order randomly permuted per call.
Image color_jitter(const Image& img, double lo, double hi, RngStream& rng);

// Separable Gaussian blur; odd kernel of about kernel_frac * min(H, W) taps,
// sigma sampled in [sigma_lo, sigma_hi], reflect padding, kernel sums to 1.
Image gaussian_blur(const Image& img, double kernel_frac, double sigma_lo,
                    double sigma_hi, RngStream& rng);

// The K=5 views of one image: one flip draw on the source, then an
// independently drawn auxiliary chain per class, primary transform last
// (Rot0/90/180/270, then one random warp). Labels are exactly 0..4.
std::vector<LabeledView> make_views(const Image& img, const AuxConfig& aux,
                                    RngStream& rng);

}  // namespace codial
