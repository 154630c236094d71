// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#pragma once

#include <string>

#include "codial/dataset.hpp"

namespace codial {

// Four easily separable shape classes on a vertical background gradient.
// The gradient gives every image an orientation cue, so rotation prediction
// stays learnable even for rotation-symmetric shapes (disks).
enum class ShapeClass : int { kDisk = 0, kSquare = 1, kTriangle = 2, kCross = 3 };
inline constexpr int kShapeClassCount = 4;

struct SyntheticShapesSpec {
  int image_size = 64;
  int per_class_count = 160;  // train+test combined; split 80/20 per class
  unsigned seed = 0;
  // Shape radius as a fraction of image_size/2.
  double scale_min = 0.35;
  double scale_max = 0.55;
  // Center offset from image center, as a fraction of image_size each axis.
  double position_jitter = 0.09;
  // Per-channel shape color range.
  double color_min = 0.55;
  double color_max = 1.0;
  // Background gray gradient: top row value and bottom row value ranges.
  double bg_top_min = 0.05;
  double bg_top_max = 0.20;
  double bg_bottom_min = 0.50;
  double bg_bottom_max = 0.70;
};

// Renders one shape image; index selects the deterministic parameter stream.
Image render_shape(const SyntheticShapesSpec& spec, ShapeClass cls, int index);

// In-memory generation of one split (80% train / 20% test, per class).
Dataset make_synthetic_split(const SyntheticShapesSpec& spec, bool test_split);

struct SyntheticOutput {
  std::string train_path;
  std::string test_path;
};

// Writes <out_dir>/train.cdld and <out_dir>/test.cdld.
SyntheticOutput gen_synthetic(const SyntheticShapesSpec& spec,
                              const std::string& out_dir);

}  // namespace codial
