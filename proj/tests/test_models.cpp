// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "codial/errors.hpp"
#include "codial/gradcheck.hpp"
#include "codial/losses.hpp"
#include "codial/models.hpp"
#include "codial/rng.hpp"
#include "doctest.h"

using namespace codial;

namespace {

template <typename T>
Tensor<T> random_batch(std::size_t b, std::size_t s, std::size_t c,
                       std::uint64_t salt) {
  RngStream rng(salt, 0, 0, Purpose::kOracle);
  std::vector<T> data(b * s * s * c);
  for (T& v : data) v = static_cast<T>(rng.uniform01());
  return Tensor<T>(Shape{b, s, s, c}, std::move(data));
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.encoder.input_size = 8;
  cfg.encoder.in_channels = 3;
  cfg.encoder.stages = {{4, 3, 2}, {8, 3, 2}};
  cfg.encoder.feature_dim = 8;
  cfg.num_classes = 5;
  cfg.repr_dim = 4;
  cfg.critic_hidden = {8, 8};
  return cfg;
}

// Snapshot/restore registered state buffers so train-mode forwards can be
// used as pure functions inside finite differences.
template <typename T>
class StateGuard {
 public:
  explicit StateGuard(ParamStore<T>& store) : store_(store) {
    for (auto& e : store_.state()) saved_.push_back(*e.buf);
  }
  void restore() {
    for (std::size_t i = 0; i < saved_.size(); ++i)
      *store_.state()[i].buf = saved_[i];
  }

 private:
  ParamStore<T>& store_;
  std::vector<std::vector<T>> saved_;
};

}  // namespace

TEST_CASE("default model produces the documented shapes") {
  RngStream init(1, 0, 0, Purpose::kInit);
  CodialModel<float> model(ModelConfig{}, init);
  const auto x = random_batch<float>(8, 64, 3, 2);
  auto enc = model.encode(x, /*train=*/true);
  REQUIRE(enc.stages.size() == 4);
  CHECK(enc.stages[0].shape() == Shape{8, 32, 32, 32});
  CHECK(enc.stages[1].shape() == Shape{8, 16, 16, 64});
  CHECK(enc.stages[2].shape() == Shape{8, 8, 8, 128});
  CHECK(enc.stages[3].shape() == Shape{8, 4, 4, 256});
  CHECK(enc.features.shape() == Shape{8, 256});
  CHECK(model.classify(enc.features).shape() == Shape{8, 5});
  auto repr = model.project_stochastic(enc.features);
  CHECK(repr.mean.shape() == Shape{8, 64});
  CHECK(repr.logvar.shape() == Shape{8, 64});
}

TEST_CASE("parameter registry holds one shared trunk") {
  RngStream init(2, 0, 0, Purpose::kInit);
  CodialModel<float> model(ModelConfig{}, init);
  std::size_t enc = 0, cls = 0, head = 0, critic = 0;
  for (const auto& e : model.params().params()) {
    if (e.name.rfind("enc.", 0) == 0) ++enc;
    if (e.name.rfind("cls.", 0) == 0) ++cls;
    if (e.name.rfind("head.", 0) == 0) ++head;
    if (e.name.rfind("critic.", 0) == 0) ++critic;
  }
  CHECK(enc == 12);     // 4 stages x (conv.w, bn.gamma, bn.beta)
  CHECK(cls == 2);
  CHECK(head == 4);
  CHECK(critic == 6);
  CHECK(model.params().param_count() == 24);
  CHECK(model.params().state().size() == 8);  // 4 stages x 2 running stats
  CHECK(model.is_mi_param("head.mean.w"));
  CHECK(model.is_mi_param("critic.l0.b"));
  CHECK(!model.is_mi_param("enc.stage0.conv.w"));
  CHECK(!model.is_mi_param("cls.w"));
}

TEST_CASE("identical init streams build bit-identical models") {
  RngStream a(7, 0, 0, Purpose::kInit);
  RngStream b(7, 0, 0, Purpose::kInit);
  CodialModel<float> ma(tiny_config(), a);
  CodialModel<float> mb(tiny_config(), b);
  const auto& pa = ma.params().params();
  const auto& pb = mb.params().params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(pa[i].value.values() == pb[i].value.values());
  }
}

TEST_CASE("eval-mode encode is pure and deterministic") {
  RngStream init(3, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_config(), init);
  // One train pass so running stats are nontrivial.
  model.encode(random_batch<float>(4, 8, 3, 5), true);
  std::vector<std::vector<float>> stats_before;
  for (auto& e : model.params().state()) stats_before.push_back(*e.buf);

  const auto x = random_batch<float>(4, 8, 3, 6);
  auto r1 = model.encode(x, false);
  auto r2 = model.encode(x, false);
  CHECK(r1.features.values() == r2.features.values());
  for (std::size_t i = 0; i < stats_before.size(); ++i)
    CHECK(*model.params().state()[i].buf == stats_before[i]);

  // Two identical images in one batch give identical feature rows.
  std::vector<float> dup;
  const auto one = random_batch<float>(1, 8, 3, 7);
  dup.insert(dup.end(), one.values().begin(), one.values().end());
  dup.insert(dup.end(), one.values().begin(), one.values().end());
  auto rd = model.encode(Tensor<float>(Shape{2, 8, 8, 3}, dup), false);
  const auto& fv = rd.features.values();
  const std::size_t fd = rd.features.dim(1);
  for (std::size_t j = 0; j < fd; ++j) CHECK(fv[j] == fv[fd + j]);
}

TEST_CASE("train-mode encode updates running stats") {
  RngStream init(4, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_config(), init);
  const auto before = *model.params().state()[0].buf;
  model.encode(random_batch<float>(4, 8, 3, 8), true);
  CHECK(*model.params().state()[0].buf != before);
}

TEST_CASE("encode rejects mis-sized inputs") {
  RngStream init(5, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_config(), init);
  CHECK_THROWS_AS(model.encode(random_batch<float>(2, 16, 3, 9), false),
                  DimensionError);
  CHECK_THROWS_AS(
      model.encode(Tensor<float>(Shape{2, 8, 8, 1},
                                 std::vector<float>(2 * 8 * 8 * 1, 0.1f)),
                   false),
      DimensionError);
}

TEST_CASE("invalid model configs are rejected") {
  RngStream init(6, 0, 0, Purpose::kInit);
  ModelConfig bad = tiny_config();
  bad.encoder.feature_dim = 16;  // last stage has 8 channels
  CHECK_THROWS_AS(CodialModel<float>(bad, init), ConfigError);
  ModelConfig one_class = tiny_config();
  one_class.num_classes = 1;
  CHECK_THROWS_AS(CodialModel<float>(one_class, init), ConfigError);
}

TEST_CASE("zero classifier weights give uniform logits and CE = ln 5") {
  RngStream init(8, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_config(), init);
  auto* w = model.params().find("cls.w");
  REQUIRE(w != nullptr);
  for (float& v : w->values_mut()) v = 0.0f;
  auto enc = model.encode(random_batch<float>(4, 8, 3, 10), false);
  auto logits = model.classify(enc.features);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t j = 1; j < 5; ++j)
      CHECK(logits.values()[r * 5 + j] ==
            doctest::Approx(logits.values()[r * 5]).epsilon(1e-6));
  auto ce = cls_loss(logits, std::vector<int>{0, 1, 2, 3});
  CHECK(ce.item() == doctest::Approx(std::log(5.0)).epsilon(1e-6));
}

TEST_CASE("stochastic head clamps logvar to [-10, 10]") {
  RngStream init(9, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_config(), init);
  auto enc = model.encode(random_batch<float>(2, 8, 3, 11), false);
  auto* b = model.params().find("head.logvar.b");
  REQUIRE(b != nullptr);
  for (float& v : b->values_mut()) v = 50.0f;
  auto hi = model.project_stochastic(enc.features);
  for (const float v : hi.logvar.values()) CHECK(v == 10.0f);
  for (float& v : b->values_mut()) v = -50.0f;
  auto lo = model.project_stochastic(enc.features);
  for (const float v : lo.logvar.values()) CHECK(v == -10.0f);
}

TEST_CASE("critic is deterministic and finite on bounded inputs") {
  RngStream init(10, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_config(), init);
  RngStream rng(11, 0, 0, Purpose::kOracle);
  std::vector<float> z(6 * 8);
  for (float& v : z) v = static_cast<float>(rng.uniform(-10.0, 10.0));
  Tensor<float> zp(Shape{6, 8}, z);
  auto s1 = model.critic_score(zp);
  auto s2 = model.critic_score(zp);
  CHECK(s1.shape() == Shape{6, 1});
  CHECK(s1.values() == s2.values());
  for (const float v : s1.values()) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(model.critic_score(Tensor<float>(
                      Shape{2, 7}, std::vector<float>(14, 0.0f))),
                  DimensionError);
}

TEST_CASE("reparam_sample is stream-deterministic and differentiable") {
  RngStream init(12, 0, 0, Purpose::kInit);
  CodialModel<double> model(tiny_config(), init);
  auto enc = model.encode(random_batch<double>(2, 8, 3, 12), false);
  auto repr = model.project_stochastic(enc.features);
  RngStream n1(13, 0, 0, Purpose::kNoise);
  RngStream n2(13, 0, 0, Purpose::kNoise);
  auto z1 = reparam_sample(repr, n1);
  auto z2 = reparam_sample(repr, n2);
  CHECK(z1.values() == z2.values());
  auto loss = sum(z1);
  loss.backward();
  auto* mw = model.params().find("head.mean.w");
  double gsum = 0.0;
  for (const double g : mw->grad()) gsum += std::fabs(g);
  CHECK(gsum > 0.0);
}

TEST_CASE("gradcheck: encode + classify + cross-entropy (64-bit)") {
  RngStream init(14, 0, 0, Purpose::kInit);
  CodialModel<double> model(tiny_config(), init);
  const auto x = random_batch<double>(2, 8, 3, 13);
  const std::vector<int> labels{1, 4};

  const auto value_fn = [&]() {
    StateGuard<double> guard(model.params());
    NoGradGuard no_grad;
    auto enc = model.encode(x, true);
    const double v = cls_loss(model.classify(enc.features), labels).item();
    guard.restore();
    return v;
  };

  StateGuard<double> guard(model.params());
  model.params().zero_grad();
  auto enc = model.encode(x, true);
  auto loss = cls_loss(model.classify(enc.features), labels);
  loss.backward();
  guard.restore();

  for (auto& e : model.params().params()) {
    if (model.is_mi_param(e.name)) continue;
    const double worst = finite_diff_gradcheck_values<double>(
        value_fn, e.value.values_mut(), e.value.grad(), 1e-5);
    INFO("param ", e.name);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("gradcheck: stochastic head (64-bit)") {
  RngStream init(15, 0, 0, Purpose::kInit);
  CodialModel<double> model(tiny_config(), init);
  RngStream rng(16, 0, 0, Purpose::kOracle);
  std::vector<double> f(3 * 8);
  for (double& v : f) v = rng.uniform(-1.0, 1.0);
  const Tensor<double> features(Shape{3, 8}, f);

  const auto head_loss = [&]() {
    auto repr = model.project_stochastic(features);
    return add(sum(mul(repr.mean, repr.mean)), sum(mul(repr.logvar, repr.logvar)));
  };
  const auto value_fn = [&]() {
    NoGradGuard no_grad;
    return head_loss().item();
  };

  model.params().zero_grad();
  head_loss().backward();
  for (const char* name :
       {"head.mean.w", "head.mean.b", "head.logvar.w", "head.logvar.b"}) {
    auto* p = model.params().find(name);
    REQUIRE(p != nullptr);
    const double worst = finite_diff_gradcheck_values<double>(
        value_fn, p->values_mut(), p->grad(), 1e-5);
    INFO("param ", name);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("gradcheck: critic w.r.t. inputs and parameters (64-bit)") {
  RngStream init(17, 0, 0, Purpose::kInit);
  CodialModel<double> model(tiny_config(), init);
  RngStream rng(18, 0, 0, Purpose::kOracle);
  std::vector<double> z(4 * 8);
  for (double& v : z) v = rng.uniform(-1.0, 1.0);

  // W.r.t. the concatenated input pair.
  const auto fn = [&](const Tensor<double>& x) {
    return sum(model.critic_score(x));
  };
  CHECK(finite_diff_gradcheck<double>(fn, z, Shape{4, 8}, 1e-5) < 1e-4);

  // W.r.t. every critic parameter.
  const Tensor<double> zp(Shape{4, 8}, z);
  const auto value_fn = [&]() {
    NoGradGuard no_grad;
    return sum(model.critic_score(zp)).item();
  };
  model.params().zero_grad();
  sum(model.critic_score(zp)).backward();
  for (auto& e : model.params().params()) {
    if (e.name.rfind("critic.", 0) != 0) continue;
    const double worst = finite_diff_gradcheck_values<double>(
        value_fn, e.value.values_mut(), e.value.grad(), 1e-5);
    INFO("param ", e.name);
    CHECK(worst < 1e-4);
  }
}
