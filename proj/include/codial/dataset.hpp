// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codial/image.hpp"

namespace codial {

// Fixed-layout binary dataset. All integers little-endian:
//   magic "CDLD" (4 bytes), version u32, count u64,
//   height u32, width u32, channels u32, class_count u32,
//   then per record: label u8 + height*width*channels pixel bytes (row-major).
inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetHeader {
  std::uint32_t version = kDatasetVersion;
  std::uint64_t count = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::uint32_t class_count = 0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Image> images;  // pixels in [0,1]
  std::vector<int> labels;    // each < header.class_count
};

// Reads only the fixed-size header; never touches the records.
DatasetHeader read_dataset_header(const std::string& path);

// Decodes every record; pixel bytes map to [0,1] via v/255.
Dataset load_dataset(const std::string& path);

// Quantizes pixels to bytes via round(clamp(v,0,1)*255).
void save_dataset(const Dataset& ds, const std::string& path);

}  // namespace codial
