// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#include "codial/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "codial/errors.hpp"

namespace codial {
namespace {

constexpr char kMagic[4] = {'C', 'D', 'L', 'D'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4 * 4;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

DatasetHeader parse_header(const std::string& path, const unsigned char* buf,
                           std::size_t got) {
  if (got < kHeaderBytes)
    throw FormatError("dataset " + path + ": truncated header, expected " +
                      std::to_string(kHeaderBytes) + " bytes, got " +
                      std::to_string(got));
  if (std::memcmp(buf, kMagic, 4) != 0)
    throw FormatError("dataset " + path + ": bad magic at byte offset 0");
  DatasetHeader h;
  h.version = get_u32(buf + 4);
  if (h.version != kDatasetVersion)
    throw FormatError("dataset " + path + ": unsupported version " +
                      std::to_string(h.version) + " at byte offset 4");
  h.count = get_u64(buf + 8);
  h.height = get_u32(buf + 16);
  h.width = get_u32(buf + 20);
  h.channels = get_u32(buf + 24);
  h.class_count = get_u32(buf + 28);
  if (h.height == 0 || h.width == 0 || h.channels == 0)
    throw FormatError("dataset " + path + ": zero image dimension in header");
  if (h.class_count == 0)
    throw FormatError("dataset " + path + ": zero class count in header");
  return h;
}

}  // namespace

DatasetHeader read_dataset_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  unsigned char buf[kHeaderBytes];
  in.read(reinterpret_cast<char*>(buf), kHeaderBytes);
  return parse_header(path, buf, static_cast<std::size_t>(in.gcount()));
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  const auto* buf = reinterpret_cast<const unsigned char*>(raw.data());
  Dataset ds;
  ds.header = parse_header(path, buf, raw.size());
  const DatasetHeader& h = ds.header;
  const std::size_t pixel_bytes =
      static_cast<std::size_t>(h.height) * h.width * h.channels;
  const std::size_t record_bytes = 1 + pixel_bytes;
  const std::size_t expected = kHeaderBytes + h.count * record_bytes;
  if (raw.size() != expected)
    throw FormatError("dataset " + path + ": expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(raw.size()));
  ds.images.reserve(h.count);
  ds.labels.reserve(h.count);
  std::size_t off = kHeaderBytes;
  for (std::uint64_t r = 0; r < h.count; ++r) {
    const int label = buf[off];
    if (label >= static_cast<int>(h.class_count))
      throw FormatError("dataset " + path + ": label " + std::to_string(label) +
                        " >= class_count " + std::to_string(h.class_count) +
                        " at byte offset " + std::to_string(off));
    ++off;
    Image img;
    img.height = static_cast<int>(h.height);
    img.width = static_cast<int>(h.width);
    img.channels = static_cast<int>(h.channels);
    img.pixels.resize(pixel_bytes);
    for (std::size_t i = 0; i < pixel_bytes; ++i)
      img.pixels[i] = static_cast<float>(buf[off + i]) / 255.0f;
    off += pixel_bytes;
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  const DatasetHeader& h = ds.header;
  if (ds.images.size() != h.count || ds.labels.size() != h.count)
    throw DimensionError("save_dataset: header count " + std::to_string(h.count) +
                         " does not match records " +
                         std::to_string(ds.images.size()));
  const std::size_t pixel_bytes =
      static_cast<std::size_t>(h.height) * h.width * h.channels;
  std::string out;
  out.reserve(kHeaderBytes + h.count * (1 + pixel_bytes));
  out.append(kMagic, 4);
  put_u32(out, h.version);
  put_u64(out, h.count);
  put_u32(out, h.height);
  put_u32(out, h.width);
  put_u32(out, h.channels);
  put_u32(out, h.class_count);
  for (std::uint64_t r = 0; r < h.count; ++r) {
    const Image& img = ds.images[r];
    if (img.height != static_cast<int>(h.height) ||
        img.width != static_cast<int>(h.width) ||
        img.channels != static_cast<int>(h.channels))
      throw DimensionError("save_dataset: record " + std::to_string(r) +
                           " shape does not match header");
    const int label = ds.labels[r];
    if (label < 0 || label >= static_cast<int>(h.class_count))
      throw LabelError("save_dataset: record " + std::to_string(r) + " label " +
                       std::to_string(label) + " out of range");
    out.push_back(static_cast<char>(label));
    for (float v : img.pixels) {
      const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
      out.push_back(static_cast<char>(
          static_cast<unsigned char>(std::lround(c * 255.0f))));
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace codial
