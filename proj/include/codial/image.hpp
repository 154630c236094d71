// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cstddef>
#include <vector>

#include "codial/errors.hpp"

namespace codial {

// Channels-last float image, values nominally in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> pixels;  // row-major (H, W, C)

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  float at(std::size_t r, std::size_t c, std::size_t ch) const {
    return pixels[(r * width + c) * channels + ch];
  }
  float& at(std::size_t r, std::size_t c, std::size_t ch) {
    return pixels[(r * width + c) * channels + ch];
  }
  std::size_t numel() const { return pixels.size(); }
};

// Primary transformation classes: the pretext label space.
enum PrimaryClass : int {
  kRot0 = 0,
  kRot90 = 1,
  kRot180 = 2,
  kRot270 = 3,
  kWarp = 4,
};
inline constexpr int kPrimaryClassCount = 5;

struct LabeledView {
  Image image;
  int label = 0;
};

}  // namespace codial
