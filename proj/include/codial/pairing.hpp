// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <vector>

#include "codial/rng.hpp"

namespace codial {

// Unordered view-class pair, stored with first < second.
struct ViewPairIndex {
  int first = 0;
  int second = 0;
  friend bool operator==(const ViewPairIndex&, const ViewPairIndex&) = default;
};

// (image, view) coordinate of one negative sample inside a batch.
struct NegativeIndex {
  int image = 0;
  int view = 0;
  friend bool operator==(const NegativeIndex&, const NegativeIndex&) = default;
};

// All C(K,2) unordered pairs in lexicographic order.
std::vector<ViewPairIndex> enumerate_pairs(int k_classes);

// k distinct pairs drawn uniformly without replacement.
std::vector<ViewPairIndex> sample_pair_subset(
    const std::vector<ViewPairIndex>& pairs, int k, RngStream& rng);

// count view coordinates drawn uniformly from images != image_index.
std::vector<NegativeIndex> draw_negatives(int batch_size, int image_index,
                                          int views_per_image, int count,
                                          RngStream& rng);

}  // namespace codial
