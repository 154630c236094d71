// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#include "codial/pairing.hpp"

#include <cstddef>
#include <utility>

#include "codial/errors.hpp"

namespace codial {

std::vector<ViewPairIndex> enumerate_pairs(int k_classes) {
  CODIAL_REQUIRE(k_classes >= 2, ConfigError,
                 "pair enumeration needs at least 2 classes");
  std::vector<ViewPairIndex> pairs;
  pairs.reserve(static_cast<std::size_t>(k_classes) *
                static_cast<std::size_t>(k_classes - 1) / 2);
  for (int a = 0; a < k_classes; ++a)
    for (int b = a + 1; b < k_classes; ++b)
      pairs.push_back(ViewPairIndex{a, b});
  return pairs;
}

std::vector<ViewPairIndex> sample_pair_subset(
    const std::vector<ViewPairIndex>& pairs, int k, RngStream& rng) {
  CODIAL_REQUIRE(k >= 1 && static_cast<std::size_t>(k) <= pairs.size(),
                 ConfigError, "pair subset size out of range");
  // Partial Fisher-Yates: the first k slots end up a uniform sample
  // without replacement.
  std::vector<ViewPairIndex> pool = pairs;
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t i = 0; i < kk; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.uniform_int(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(kk);
  return pool;
}

std::vector<NegativeIndex> draw_negatives(int batch_size, int image_index,
                                          int views_per_image, int count,
                                          RngStream& rng) {
  CODIAL_REQUIRE(batch_size >= 2, NoNegativesError,
                 "negatives need at least 2 images in the batch");
  CODIAL_REQUIRE(image_index >= 0 && image_index < batch_size, ConfigError,
                 "anchor image index outside the batch");
  CODIAL_REQUIRE(views_per_image >= 1, ConfigError,
                 "need at least one view per image");
  CODIAL_REQUIRE(count >= 0, ConfigError, "negative count must be nonnegative");
  const auto slots = static_cast<std::uint64_t>(batch_size - 1) *
                     static_cast<std::uint64_t>(views_per_image);
  std::vector<NegativeIndex> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t r = rng.uniform_int(slots);
    auto img = static_cast<int>(r / static_cast<std::uint64_t>(views_per_image));
    if (img >= image_index) ++img;  // skip the anchor image
    const auto view =
        static_cast<int>(r % static_cast<std::uint64_t>(views_per_image));
    out.push_back(NegativeIndex{img, view});
  }
  return out;
}

}  // namespace codial
