// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#include "codial/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "codial/errors.hpp"
#include "codial/rng.hpp"

namespace codial {
namespace {

struct ShapeParams {
  double radius;      // px
  double cr, cc;      // center, px
  double color[3];    // shape RGB
  double bg_top;      // background gray at row 0
  double bg_bottom;   // background gray at last row
};

void validate(const SyntheticShapesSpec& spec) {
  if (spec.image_size < 16)
    throw ConfigError("synthetic: image_size must be at least 16");
  if (spec.per_class_count < 5)
    throw ConfigError("synthetic: per_class_count must be at least 5");
  if (!(spec.scale_min > 0 && spec.scale_min <= spec.scale_max && spec.scale_max <= 1.0))
    throw ConfigError("synthetic: scale range invalid");
  // Classes must stay visually distinguishable: radius >= 6 px at 64x64 scale.
  const double min_radius = spec.scale_min * spec.image_size / 2.0;
  if (min_radius < 6.0 * spec.image_size / 64.0)
    throw ConfigError("synthetic: scale_min too small, shapes degenerate");
  if (spec.position_jitter < 0 || spec.position_jitter > 0.2)
    throw ConfigError("synthetic: position_jitter out of [0, 0.2]");
  const double max_extent = spec.scale_max * spec.image_size / 2.0 +
                            spec.position_jitter * spec.image_size;
  if (max_extent > spec.image_size / 2.0)
    throw ConfigError("synthetic: shapes can leave the frame; shrink scale or jitter");
  if (!(spec.color_min >= 0 && spec.color_min <= spec.color_max && spec.color_max <= 1.0))
    throw ConfigError("synthetic: color range invalid");
  if (!(spec.bg_top_min >= 0 && spec.bg_top_min <= spec.bg_top_max &&
        spec.bg_bottom_min <= spec.bg_bottom_max && spec.bg_bottom_max <= 1.0))
    throw ConfigError("synthetic: background ranges invalid");
}

ShapeParams draw_params(const SyntheticShapesSpec& spec, ShapeClass cls, int index) {
  const std::uint64_t stream_index =
      static_cast<std::uint64_t>(static_cast<int>(cls)) * 1000003ull +
      static_cast<std::uint64_t>(index);
  RngStream rng(spec.seed, 0, stream_index, Purpose::kData);
  ShapeParams p{};
  p.radius = rng.uniform(spec.scale_min, spec.scale_max) * spec.image_size / 2.0;
  const double j = spec.position_jitter * spec.image_size;
  p.cr = spec.image_size / 2.0 + rng.uniform(-j, j);
  p.cc = spec.image_size / 2.0 + rng.uniform(-j, j);
  for (double& c : p.color) c = rng.uniform(spec.color_min, spec.color_max);
  p.bg_top = rng.uniform(spec.bg_top_min, spec.bg_top_max);
  p.bg_bottom = rng.uniform(spec.bg_bottom_min, spec.bg_bottom_max);
  return p;
}

double rect_sdf(double dr, double dc, double half_r, double half_c) {
  return std::max(std::abs(dr) - half_r, std::abs(dc) - half_c);
}

// Signed distance (negative inside) from pixel (r,c) to the shape boundary.
double shape_sdf(ShapeClass cls, double dr, double dc, double radius) {
  switch (cls) {
    case ShapeClass::kDisk:
      return std::hypot(dr, dc) - radius;
    case ShapeClass::kSquare: {
      const double half = radius * 0.85;
      return rect_sdf(dr, dc, half, half);
    }
    case ShapeClass::kTriangle: {
      // Up-pointing equilateral triangle inscribed in the radius circle:
      // intersection of three half-planes through the edges.
      double d = -1e9;
      for (int k = 0; k < 3; ++k) {
        // Outward edge normals at 90, 210, 330 degrees measured in (dc, -dr)
        // screen coordinates; edge line sits radius/2 from the center.
        const double ang = (210.0 + 120.0 * k) * 3.14159265358979323846 / 180.0;
        const double nr = std::sin(ang), nc = std::cos(ang);
        d = std::max(d, dr * nr + dc * nc - radius * 0.5);
      }
      return d;
    }
    case ShapeClass::kCross: {
      const double arm = radius;
      const double thick = radius * 0.32;
      return std::min(rect_sdf(dr, dc, thick, arm), rect_sdf(dr, dc, arm, thick));
    }
  }
  throw ConfigError("synthetic: unknown shape class");
}

}  // namespace

Image render_shape(const SyntheticShapesSpec& spec, ShapeClass cls, int index) {
  validate(spec);
  const ShapeParams p = draw_params(spec, cls, index);
  const int s = spec.image_size;
  Image img;
  img.height = s;
  img.width = s;
  img.channels = 3;
  img.pixels.assign(static_cast<std::size_t>(s) * s * 3, 0.0f);
  for (int r = 0; r < s; ++r) {
    const double t = s > 1 ? static_cast<double>(r) / (s - 1) : 0.0;
    const double bg = p.bg_top + (p.bg_bottom - p.bg_top) * t;
    for (int c = 0; c < s; ++c) {
      const double d = shape_sdf(cls, r + 0.5 - p.cr, c + 0.5 - p.cc, p.radius);
      const double alpha = std::clamp(0.5 - d, 0.0, 1.0);  // ~1 px soft edge
      for (int ch = 0; ch < 3; ++ch) {
        const double v = bg * (1.0 - alpha) + p.color[ch] * alpha;
        img.at(r, c, ch) = static_cast<float>(v);
      }
    }
  }
  return img;
}

Dataset make_synthetic_split(const SyntheticShapesSpec& spec, bool test_split) {
  validate(spec);
  const int train_per_class =
      static_cast<int>(std::lround(0.8 * spec.per_class_count));
  Dataset ds;
  ds.header.version = kDatasetVersion;
  ds.header.height = static_cast<std::uint32_t>(spec.image_size);
  ds.header.width = static_cast<std::uint32_t>(spec.image_size);
  ds.header.channels = 3;
  ds.header.class_count = kShapeClassCount;
  for (int cls = 0; cls < kShapeClassCount; ++cls) {
    const int begin = test_split ? train_per_class : 0;
    const int end = test_split ? spec.per_class_count : train_per_class;
    for (int i = begin; i < end; ++i) {
      ds.images.push_back(
          render_shape(spec, static_cast<ShapeClass>(cls), i));
      ds.labels.push_back(cls);
    }
  }
  ds.header.count = ds.images.size();
  return ds;
}

SyntheticOutput gen_synthetic(const SyntheticShapesSpec& spec,
                              const std::string& out_dir) {
  validate(spec);
  std::filesystem::create_directories(out_dir);
  SyntheticOutput out;
  out.train_path = (std::filesystem::path(out_dir) / "train.cdld").string();
  out.test_path = (std::filesystem::path(out_dir) / "test.cdld").string();
  save_dataset(make_synthetic_split(spec, false), out.train_path);
  save_dataset(make_synthetic_split(spec, true), out.test_path);
  return out;
}

}  // namespace codial
