// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "codial/errors.hpp"
#include "codial/evaluation.hpp"
#include "codial/rng.hpp"
#include "codial/synthetic.hpp"

using namespace codial;

namespace {

ModelConfig tiny_model() {
  ModelConfig mc;
  mc.encoder.input_size = 16;
  mc.encoder.in_channels = 3;
  mc.encoder.stages = {{8, 3, 2}, {16, 3, 2}};
  mc.encoder.feature_dim = 16;
  mc.repr_dim = 8;
  mc.critic_hidden = {16};
  return mc;
}

Tensor<float> random_images(int count, int size, int channels, unsigned seed) {
  RngStream rng(seed, 0, 0, Purpose::kOracle);
  std::vector<float> v(static_cast<std::size_t>(count) * size * size * channels);
  for (float& x : v) x = static_cast<float>(rng.uniform01());
  return Tensor<float>({static_cast<std::size_t>(count),
                        static_cast<std::size_t>(size),
                        static_cast<std::size_t>(size),
                        static_cast<std::size_t>(channels)},
                       std::move(v));
}

// Two well-separated 2-D Gaussian blobs.
void make_blobs(int per_class, unsigned seed, std::vector<float>& x,
                std::vector<int>& y) {
  RngStream rng(seed, 0, 0, Purpose::kOracle);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i) {
      const double cx = c == 0 ? -2.0 : 2.0;
      x.push_back(static_cast<float>(cx + 0.3 * rng.normal()));
      x.push_back(static_cast<float>(0.3 * rng.normal()));
      y.push_back(c);
    }
}

}  // namespace

TEST_CASE("extract_features pools to the largest size under pooled_dim") {
  RngStream init(1, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_model(), init);
  Tensor<float> images = random_images(6, 16, 3, 3);

  // Stage 0 activation is (6, 8, 8, 8): natural flattened size 512.
  SUBCASE("natural size pools to identity") {
    Tensor<float> f = extract_features(model, images, 0, 512);
    CHECK(f.shape() == Shape{6, 512});
    NoGradGuard ng;
    EncodeResult<float> enc = model.encode(images, false);
    const Tensor<float>& act = enc.stages[0];
    for (std::size_t i = 0; i < f.numel(); ++i)
      CHECK(f.values()[i] == act.values()[i]);
  }
  SUBCASE("tight budgets shrink the spatial grid") {
    // side = floor(sqrt(128/8)) = 4 -> 4*4*8 = 128.
    CHECK(extract_features(model, images, 0, 128).shape() == Shape{6, 128});
    // side = floor(sqrt(100/8)) = 3 -> 72.
    CHECK(extract_features(model, images, 0, 100).shape() == Shape{6, 72});
    // Minimum side of 1 when only channels fit.
    CHECK(extract_features(model, images, 0, 8).shape() == Shape{6, 8});
  }
  SUBCASE("row count equals image count and repeated runs are bit-identical") {
    Tensor<float> a = extract_features(model, images, 1, 64);
    Tensor<float> b = extract_features(model, images, 1, 64);
    CHECK(a.dim(0) == 6);
    CHECK(a.values() == b.values());
  }
  SUBCASE("invalid stages and budgets are rejected") {
    CHECK_THROWS_AS(extract_features(model, images, 2, 64), ConfigError);
    CHECK_THROWS_AS(extract_features(model, images, -1, 64), ConfigError);
    CHECK_THROWS_AS(extract_features(model, images, 0, 7), ConfigError);
  }
}

TEST_CASE("adaptive pooling preserves per-channel block means exactly") {
  RngStream init(1, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_model(), init);
  Tensor<float> images = random_images(2, 16, 3, 5);
  NoGradGuard ng;
  EncodeResult<float> enc = model.encode(images, false);
  const Tensor<float>& act = enc.stages[0];  // (2, 8, 8, 8)
  Tensor<float> pooled = extract_features(model, images, 0, 128);  // 4x4x8
  // Each pooled cell covers an exact 2x2 block.
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t ch = 0; ch < 8; ++ch) {
          double mean = 0;
          for (std::size_t dr = 0; dr < 2; ++dr)
            for (std::size_t dc = 0; dc < 2; ++dc)
              mean += act.values()[((n * 8 + 2 * r + dr) * 8 + 2 * c + dc) * 8 + ch];
          mean /= 4.0;
          const float got = pooled.values()[(n * 16 + r * 4 + c) * 8 + ch];
          CHECK(got == doctest::Approx(mean).epsilon(1e-6));
        }
}

TEST_CASE("linear probe separates blobs and matches chance on noise") {
  SUBCASE("separable blobs reach at least 0.99") {
    std::vector<float> xtr, xte;
    std::vector<int> ytr, yte;
    make_blobs(50, 1, xtr, ytr);
    make_blobs(20, 2, xte, yte);
    ProbeConfig cfg;
    cfg.epochs = 300;
    ProbeReport rep = linear_probe(Tensor<float>({100, 2}, std::move(xtr)), ytr,
                                   Tensor<float>({40, 2}, std::move(xte)), yte,
                                   cfg);
    CHECK(rep.test_acc >= 0.99);
    CHECK(rep.train_acc >= 0.99);
    CHECK(rep.epochs_run >= 1);
  }
  SUBCASE("shuffled labels on 4 classes sit near chance") {
    RngStream rng(9, 0, 0, Purpose::kOracle);
    const int n_train = 2000, n_test = 2000, dim = 8;
    std::vector<float> xtr, xte;
    std::vector<int> ytr, yte;
    for (int i = 0; i < n_train; ++i) {
      for (int d = 0; d < dim; ++d)
        xtr.push_back(static_cast<float>(rng.normal()));
      ytr.push_back(static_cast<int>(rng.uniform_int(4)));
    }
    for (int i = 0; i < n_test; ++i) {
      for (int d = 0; d < dim; ++d)
        xte.push_back(static_cast<float>(rng.normal()));
      yte.push_back(static_cast<int>(rng.uniform_int(4)));
    }
    ProbeConfig cfg;
    cfg.epochs = 100;
    ProbeReport rep = linear_probe(
        Tensor<float>({static_cast<std::size_t>(n_train),
                       static_cast<std::size_t>(dim)}, std::move(xtr)), ytr,
        Tensor<float>({static_cast<std::size_t>(n_test),
                       static_cast<std::size_t>(dim)}, std::move(xte)), yte,
        cfg);
    CHECK(rep.test_acc > 0.20);
    CHECK(rep.test_acc < 0.30);
  }
  SUBCASE("single-class input is degenerate") {
    std::vector<float> x = {0, 1, 2, 3};
    std::vector<int> y = {1, 1};
    CHECK_THROWS_AS(linear_probe(Tensor<float>({2, 2}, x), y,
                                 Tensor<float>({2, 2}, x), y, ProbeConfig{}),
                    DegenerateLabelsError);
  }
  SUBCASE("mismatched rows are rejected") {
    std::vector<float> x = {0, 1, 2, 3};
    std::vector<int> y = {0, 1, 0};
    CHECK_THROWS_AS(linear_probe(Tensor<float>({2, 2}, x), y,
                                 Tensor<float>({2, 2}, x), y, ProbeConfig{}),
                    DimensionError);
  }
}

TEST_CASE("raw-pixel probe on the default shapes dataset reaches 0.8") {
  SyntheticShapesSpec spec;  // default 160 per class: 512 train / 128 test
  Dataset train = make_synthetic_split(spec, false);
  Dataset test = make_synthetic_split(spec, true);
  auto flatten = [](const Dataset& ds) {
    std::vector<float> out;
    for (const Image& img : ds.images)
      out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return Tensor<float>({ds.images.size(), ds.images[0].pixels.size()},
                         std::move(out));
  };
  ProbeConfig cfg;
  cfg.epochs = 200;
  ProbeReport rep =
      linear_probe(flatten(train), train.labels, flatten(test), test.labels, cfg);
  CHECK(rep.train_acc >= 0.95);
  CHECK(rep.test_acc >= 0.8);
}

TEST_CASE("knn retrieval ranks by cosine with deterministic ties") {
  SUBCASE("hand-computed ordering") {
    std::vector<float> gallery = {1, 0, 0, 1, -1, 0};
    std::vector<float> query = {1, 0.1f};
    std::vector<std::size_t> top =
        knn_retrieve(query, Tensor<float>({3, 2}, gallery), 3);
    CHECK(top == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("query present in the gallery ranks itself first") {
    std::vector<float> gallery = {0.3f, 0.7f, -1, 2, 5, 5};
    std::vector<float> query = {0.3f, 0.7f};
    CHECK(knn_retrieve(query, Tensor<float>({3, 2}, gallery), 1)[0] == 0);
  }
  SUBCASE("scaling the query preserves the full ranking") {
    RngStream rng(4, 0, 0, Purpose::kOracle);
    std::vector<float> gallery(40);
    for (float& v : gallery) v = static_cast<float>(rng.normal());
    std::vector<float> q = {0.5f, -1.5f, 2.0f, 0.1f};
    std::vector<float> q7 = q;
    for (float& v : q7) v *= 7.0f;
    Tensor<float> g({10, 4}, gallery);
    CHECK(knn_retrieve(q, g, 10) == knn_retrieve(q7, g, 10));
  }
  SUBCASE("scaling one gallery row preserves the ranking") {
    RngStream rng(5, 0, 0, Purpose::kOracle);
    std::vector<float> gallery(40);
    for (float& v : gallery) v = static_cast<float>(rng.normal());
    std::vector<float> scaled = gallery;
    for (int c = 0; c < 4; ++c) scaled[3 * 4 + c] *= 11.0f;
    std::vector<float> q = {1, 1, 0, -1};
    CHECK(knn_retrieve(q, Tensor<float>({10, 4}, gallery), 10) ==
          knn_retrieve(q, Tensor<float>({10, 4}, scaled), 10));
  }
  SUBCASE("zero-norm rows score 0 and ties break by ascending index") {
    // Rows: zero vector, zero vector, opposite of query.
    std::vector<float> gallery = {0, 0, 0, 0, -1, 0};
    std::vector<float> q = {1, 0};
    std::vector<std::size_t> top =
        knn_retrieve(q, Tensor<float>({3, 2}, gallery), 3);
    CHECK(top == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("bounds are enforced") {
    std::vector<float> gallery = {1, 0};
    Tensor<float> g({1, 2}, gallery);
    CHECK_THROWS_AS(knn_retrieve({1, 0}, g, 2), ConfigError);
    CHECK_THROWS_AS(knn_retrieve({1, 0}, g, 0), ConfigError);
    CHECK_THROWS_AS(knn_retrieve({1, 0, 0}, g, 1), DimensionError);
  }
}
