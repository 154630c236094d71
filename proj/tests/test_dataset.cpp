// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "codial/dataset.hpp"
#include "codial/errors.hpp"
#include "codial/rng.hpp"
#include "codial/synthetic.hpp"

using namespace codial;

namespace {

std::string tmp_dir() {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("codial_dataset_test_" + std::to_string(counter++));
  std::filesystem::create_directories(p);
  return p.string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Dataset tiny_dataset(int count, int size, int channels, int classes,
                     unsigned seed) {
  Dataset ds;
  ds.header.count = static_cast<std::uint64_t>(count);
  ds.header.height = static_cast<std::uint32_t>(size);
  ds.header.width = static_cast<std::uint32_t>(size);
  ds.header.channels = static_cast<std::uint32_t>(channels);
  ds.header.class_count = static_cast<std::uint32_t>(classes);
  RngStream rng(seed, 0, 0, Purpose::kOracle);
  for (int i = 0; i < count; ++i) {
    Image img;
    img.height = size;
    img.width = size;
    img.channels = channels;
    img.pixels.resize(static_cast<std::size_t>(size) * size * channels);
    for (float& v : img.pixels)
      v = static_cast<float>(rng.uniform_int(256)) / 255.0f;
    ds.images.push_back(std::move(img));
    ds.labels.push_back(static_cast<int>(rng.uniform_int(classes)));
  }
  return ds;
}

}  // namespace

TEST_CASE("save then load preserves pixels to 1/255 and labels exactly") {
  const std::string dir = tmp_dir();
  const std::string path = dir + "/a.cdld";
  Dataset ds = tiny_dataset(7, 5, 3, 4, 11);
  save_dataset(ds, path);
  Dataset back = load_dataset(path);
  REQUIRE(back.images.size() == 7);
  CHECK(back.header.height == 5);
  CHECK(back.header.class_count == 4);
  CHECK(back.labels == ds.labels);
  for (std::size_t i = 0; i < back.images.size(); ++i)
    for (std::size_t p = 0; p < back.images[i].pixels.size(); ++p) {
      // Source pixels are already 8-bit quantized, so round trip is exact.
      CHECK(back.images[i].pixels[p] ==
            doctest::Approx(ds.images[i].pixels[p]).epsilon(1e-9));
    }
}

TEST_CASE("header-only read matches the full load without touching records") {
  const std::string path = tmp_dir() + "/b.cdld";
  save_dataset(tiny_dataset(9, 4, 1, 3, 5), path);
  DatasetHeader h = read_dataset_header(path);
  CHECK(h.count == 9);
  CHECK(h.height == 4);
  CHECK(h.width == 4);
  CHECK(h.channels == 1);
  CHECK(h.class_count == 3);

  // Header parsing must ignore everything after the fixed prefix: truncate
  // the records entirely and the header still reads.
  const std::string full = read_bytes(path);
  const std::string trunc_path = tmp_dir() + "/b_trunc.cdld";
  write_bytes(trunc_path, full.substr(0, 32));
  DatasetHeader h2 = read_dataset_header(trunc_path);
  CHECK(h2.count == 9);
}

TEST_CASE("same dataset saved twice gives byte-identical files") {
  const std::string d = tmp_dir();
  Dataset ds = tiny_dataset(6, 6, 3, 2, 21);
  save_dataset(ds, d + "/x1.cdld");
  save_dataset(ds, d + "/x2.cdld");
  CHECK(read_bytes(d + "/x1.cdld") == read_bytes(d + "/x2.cdld"));
}

TEST_CASE("format errors name the problem and the offset") {
  const std::string d = tmp_dir();
  const std::string path = d + "/c.cdld";
  save_dataset(tiny_dataset(4, 3, 3, 2, 1), path);
  const std::string full = read_bytes(path);

  SUBCASE("truncated records report expected vs actual byte counts") {
    write_bytes(d + "/trunc.cdld", full.substr(0, full.size() - 5));
    try {
      load_dataset(d + "/trunc.cdld");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("expected " + std::to_string(full.size())) !=
            std::string::npos);
      CHECK(msg.find("got " + std::to_string(full.size() - 5)) !=
            std::string::npos);
    }
  }
  SUBCASE("truncated header") {
    write_bytes(d + "/hdr.cdld", full.substr(0, 10));
    CHECK_THROWS_AS(read_dataset_header(d + "/hdr.cdld"), FormatError);
    CHECK_THROWS_AS(load_dataset(d + "/hdr.cdld"), FormatError);
  }
  SUBCASE("bad magic points at byte offset 0") {
    std::string bad = full;
    bad[0] = 'X';
    write_bytes(d + "/magic.cdld", bad);
    try {
      load_dataset(d + "/magic.cdld");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
    }
  }
  SUBCASE("unsupported version") {
    std::string bad = full;
    bad[4] = 9;
    write_bytes(d + "/ver.cdld", bad);
    CHECK_THROWS_AS(load_dataset(d + "/ver.cdld"), FormatError);
  }
  SUBCASE("label out of range is rejected with its offset") {
    std::string bad = full;
    bad[32] = 7;  // first record's label byte; class_count is 2
    write_bytes(d + "/label.cdld", bad);
    try {
      load_dataset(d + "/label.cdld");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("label 7") != std::string::npos);
      CHECK(msg.find("offset 32") != std::string::npos);
    }
  }
  SUBCASE("missing file is an IO error") {
    CHECK_THROWS_AS(load_dataset(d + "/nope.cdld"), IoError);
  }
}

TEST_CASE("save rejects inconsistent records") {
  Dataset ds = tiny_dataset(3, 4, 3, 2, 2);
  const std::string d = tmp_dir();
  SUBCASE("count mismatch") {
    ds.header.count = 5;
    CHECK_THROWS_AS(save_dataset(ds, d + "/bad.cdld"), DimensionError);
  }
  SUBCASE("label out of range") {
    ds.labels[1] = 9;
    CHECK_THROWS_AS(save_dataset(ds, d + "/bad.cdld"), LabelError);
  }
  SUBCASE("shape mismatch") {
    ds.images[2].width = 5;
    CHECK_THROWS_AS(save_dataset(ds, d + "/bad.cdld"), DimensionError);
  }
}

TEST_CASE("synthetic generation is deterministic and correctly split") {
  SyntheticShapesSpec spec;
  spec.per_class_count = 15;  // 12 train / 3 test per class
  spec.seed = 3;
  const std::string d1 = tmp_dir(), d2 = tmp_dir();
  SyntheticOutput o1 = gen_synthetic(spec, d1);
  SyntheticOutput o2 = gen_synthetic(spec, d2);
  CHECK(read_bytes(o1.train_path) == read_bytes(o2.train_path));
  CHECK(read_bytes(o1.test_path) == read_bytes(o2.test_path));

  Dataset train = load_dataset(o1.train_path);
  Dataset test = load_dataset(o1.test_path);
  CHECK(train.header.count == 48);
  CHECK(test.header.count == 12);
  CHECK(train.header.class_count == 4);
  std::map<int, int> train_counts, test_counts;
  for (int y : train.labels) ++train_counts[y];
  for (int y : test.labels) ++test_counts[y];
  for (int c = 0; c < 4; ++c) {
    CHECK(train_counts[c] == 12);
    CHECK(test_counts[c] == 3);
  }

  // Different seed changes the bytes.
  SyntheticShapesSpec other = spec;
  other.seed = 4;
  const std::string d3 = tmp_dir();
  SyntheticOutput o3 = gen_synthetic(other, d3);
  CHECK(read_bytes(o1.train_path) != read_bytes(o3.train_path));
}

TEST_CASE("train and test splits are disjoint parameter draws") {
  SyntheticShapesSpec spec;
  spec.per_class_count = 10;
  spec.seed = 7;
  Dataset train = make_synthetic_split(spec, false);
  Dataset test = make_synthetic_split(spec, true);
  CHECK(train.images.size() == 32);
  CHECK(test.images.size() == 8);
  for (const Image& a : test.images)
    for (const Image& b : train.images) CHECK(a.pixels != b.pixels);
}

TEST_CASE("rendered shapes stay in range with a vertical brightness cue") {
  SyntheticShapesSpec spec;
  spec.per_class_count = 8;
  spec.seed = 9;
  for (int cls = 0; cls < kShapeClassCount; ++cls) {
    for (int i = 0; i < 8; ++i) {
      Image img = render_shape(spec, static_cast<ShapeClass>(cls), i);
      REQUIRE(img.height == 64);
      REQUIRE(img.channels == 3);
      double top = 0, bottom = 0;
      for (float v : img.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
      // Compare border rows outside any shape: row 0 vs the last row.
      for (int c = 0; c < img.width; ++c)
        for (int ch = 0; ch < 3; ++ch) {
          top += img.at(0, c, ch);
          bottom += img.at(img.height - 1, c, ch);
        }
      CHECK(top < bottom);
    }
  }
}

TEST_CASE("shape classes have distinct silhouettes") {
  SyntheticShapesSpec spec;
  spec.per_class_count = 8;
  spec.position_jitter = 0.0;
  spec.scale_min = 0.5;
  spec.scale_max = 0.5;
  // Coverage fraction above background separates the four classes. Shapes
  // never reach the border, so column 0 gives each row's background value.
  std::vector<double> coverage;
  for (int cls = 0; cls < kShapeClassCount; ++cls) {
    Image img = render_shape(spec, static_cast<ShapeClass>(cls), 0);
    int on = 0;
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        bool off_background = false;
        for (int ch = 0; ch < 3; ++ch)
          if (std::abs(img.at(r, c, ch) - img.at(r, 0, ch)) > 0.05f)
            off_background = true;
        if (off_background) ++on;
      }
    coverage.push_back(static_cast<double>(on) / (64.0 * 64.0));
  }
  // Disk > triangle and square > cross in covered area at equal radius.
  CHECK(coverage[0] > coverage[2]);
  CHECK(coverage[1] > coverage[3]);
  for (double c : coverage) CHECK(c > 0.01);
}

TEST_CASE("degenerate specs are rejected") {
  SyntheticShapesSpec spec;
  SUBCASE("too-small shapes") {
    spec.scale_min = 0.05;
    CHECK_THROWS_AS(make_synthetic_split(spec, false), ConfigError);
  }
  SUBCASE("shapes leaving the frame") {
    spec.scale_max = 0.9;
    spec.position_jitter = 0.2;
    CHECK_THROWS_AS(make_synthetic_split(spec, false), ConfigError);
  }
  SUBCASE("tiny per-class count") {
    spec.per_class_count = 2;
    CHECK_THROWS_AS(make_synthetic_split(spec, false), ConfigError);
  }
}
