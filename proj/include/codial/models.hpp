// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "codial/errors.hpp"
#include "codial/nn.hpp"
#include "codial/ops.hpp"
#include "codial/params.hpp"
#include "codial/rng.hpp"
#include "codial/tensor.hpp"

namespace codial {

struct ConvStage {
  int channels = 0;
  int kernel = 3;
  int stride = 2;
};

struct EncoderConfig {
  int input_size = 64;
  int in_channels = 3;
  std::vector<ConvStage> stages{{32, 3, 2}, {64, 3, 2}, {128, 3, 2}, {256, 3, 2}};
  int feature_dim = 256;  // must equal the last stage's channel count
};

struct ModelConfig {
  EncoderConfig encoder;
  int num_classes = 5;
  int repr_dim = 64;  // D of the stochastic head
  std::vector<int> critic_hidden{256, 256};
};

// Diagonal Gaussian over the representation; logvar clamped to [-10, 10].
template <typename T>
struct GaussianRepr {
  Tensor<T> mean;
  Tensor<T> logvar;
};

template <typename T>
struct EncodeResult {
  std::vector<Tensor<T>> stages;  // per-stage activation maps (B,H,W,C)
  Tensor<T> features;             // pooled final vectors (B, feature_dim)
};

// One reparameterized sample z = mean + exp(logvar/2) * eps, eps ~ N(0, I)
// drawn from the given stream (grad-free noise).
template <typename T>
Tensor<T> reparam_sample(const GaussianRepr<T>& repr, RngStream& rng) {
  std::vector<T> noise(repr.mean.numel());
  for (T& v : noise) v = static_cast<T>(rng.normal());
  Tensor<T> eps(repr.mean.shape(), std::move(noise), /*requires_grad=*/false);
  return reparam(repr.mean, repr.logvar, eps);
}

// Encoder trunk + transformation classifier + stochastic head + critic,
// all drawing from one parameter registry (single trunk by construction).
template <typename T>
class CodialModel {
 public:
  CodialModel(ModelConfig cfg, RngStream& init_rng) : cfg_(std::move(cfg)) {
    const auto& enc = cfg_.encoder;
    CODIAL_REQUIRE(!enc.stages.empty(), ConfigError, "encoder needs stages");
    CODIAL_REQUIRE(enc.feature_dim == enc.stages.back().channels, ConfigError,
                   "feature_dim must equal the last stage's channels");
    CODIAL_REQUIRE(cfg_.num_classes >= 2, ConfigError, "need 2+ classes");
    CODIAL_REQUIRE(cfg_.repr_dim >= 1, ConfigError, "repr_dim must be positive");

    bn_states_.resize(enc.stages.size());
    int cin = enc.in_channels;
    for (std::size_t i = 0; i < enc.stages.size(); ++i) {
      const ConvStage& s = enc.stages[i];
      CODIAL_REQUIRE(s.channels > 0 && s.kernel > 0 && s.stride > 0,
                     ConfigError, "conv stage fields must be positive");
      const std::string p = "enc.stage" + std::to_string(i);
      const auto kh = static_cast<std::size_t>(s.kernel);
      const auto ci = static_cast<std::size_t>(cin);
      const auto co = static_cast<std::size_t>(s.channels);
      conv_w_.push_back(create_normal(p + ".conv.w", Shape{kh, kh, ci, co},
                                      he_std(kh * kh * ci), init_rng));
      bn_gamma_.push_back(create_const(p + ".bn.gamma", Shape{co}, T(1)));
      bn_beta_.push_back(create_const(p + ".bn.beta", Shape{co}, T(0)));
      bn_states_[i].running_mean.assign(co, T(0));
      bn_states_[i].running_var.assign(co, T(1));
      store_.register_state(p + ".bn.running_mean", &bn_states_[i].running_mean);
      store_.register_state(p + ".bn.running_var", &bn_states_[i].running_var);
      cin = s.channels;
    }
    const auto fd = static_cast<std::size_t>(enc.feature_dim);
    const auto nc = static_cast<std::size_t>(cfg_.num_classes);
    const auto rd = static_cast<std::size_t>(cfg_.repr_dim);
    cls_w_ = create_normal("cls.w", Shape{fd, nc}, lin_std(fd), init_rng);
    cls_b_ = create_const("cls.b", Shape{nc}, T(0));
    mean_w_ = create_normal("head.mean.w", Shape{fd, rd}, lin_std(fd), init_rng);
    mean_b_ = create_const("head.mean.b", Shape{rd}, T(0));
    logvar_w_ =
        create_normal("head.logvar.w", Shape{fd, rd}, lin_std(fd), init_rng);
    logvar_b_ = create_const("head.logvar.b", Shape{rd}, T(0));
    std::size_t prev = 2 * rd;
    for (std::size_t i = 0; i < cfg_.critic_hidden.size(); ++i) {
      const auto width = static_cast<std::size_t>(cfg_.critic_hidden[i]);
      CODIAL_REQUIRE(width > 0, ConfigError, "critic widths must be positive");
      const std::string p = "critic.l" + std::to_string(i);
      critic_w_.push_back(
          create_normal(p + ".w", Shape{prev, width}, he_std(prev), init_rng));
      critic_b_.push_back(create_const(p + ".b", Shape{width}, T(0)));
      prev = width;
    }
    const std::string p = "critic.l" + std::to_string(cfg_.critic_hidden.size());
    critic_w_.push_back(
        create_normal(p + ".w", Shape{prev, 1}, lin_std(prev), init_rng));
    critic_b_.push_back(create_const(p + ".b", Shape{1}, T(0)));
  }

  CodialModel(const CodialModel&) = delete;
  CodialModel& operator=(const CodialModel&) = delete;

  // images (B, S, S, Cin) -> per-stage maps + pooled (B, feature_dim).
  EncodeResult<T> encode(const Tensor<T>& images, bool train) {
    const auto& enc = cfg_.encoder;
    if (images.rank() != 4 ||
        images.dim(1) != static_cast<std::size_t>(enc.input_size) ||
        images.dim(2) != static_cast<std::size_t>(enc.input_size) ||
        images.dim(3) != static_cast<std::size_t>(enc.in_channels)) {
      throw DimensionError("encode: expected (B," +
                           std::to_string(enc.input_size) + "," +
                           std::to_string(enc.input_size) + "," +
                           std::to_string(enc.in_channels) + "), got " +
                           shape_str(images.shape()));
    }
    EncodeResult<T> out;
    Tensor<T> x = images;
    for (std::size_t i = 0; i < enc.stages.size(); ++i) {
      const ConvStage& s = enc.stages[i];
      x = conv2d(x, conv_w_[i], static_cast<std::size_t>(s.stride),
                 static_cast<std::size_t>(s.kernel / 2));
      x = batch_norm(x, bn_gamma_[i], bn_beta_[i], bn_states_[i], train);
      x = relu(x);
      out.stages.push_back(x);
    }
    Tensor<T> pooled = adaptive_avg_pool(x, 1, 1);
    out.features = reshape(
        pooled, Shape{pooled.dim(0), static_cast<std::size_t>(enc.feature_dim)});
    return out;
  }

  // (B, feature_dim) -> logits (B, K).
  Tensor<T> classify(const Tensor<T>& features) {
    return dense(features, cls_w_, cls_b_);
  }

  // (B, feature_dim) -> diagonal Gaussian with clamped logvar.
  GaussianRepr<T> project_stochastic(const Tensor<T>& features) {
    return GaussianRepr<T>{
        dense(features, mean_w_, mean_b_),
        clamp(dense(features, logvar_w_, logvar_b_), T(-10), T(10))};
  }

  // Concatenated pair (B, 2D) -> scalar score per row (B, 1).
  Tensor<T> critic_score(const Tensor<T>& z_pair) {
    CODIAL_REQUIRE(z_pair.rank() == 2 &&
                       z_pair.dim(1) ==
                           2 * static_cast<std::size_t>(cfg_.repr_dim),
                   DimensionError, "critic expects rows of length 2D");
    Tensor<T> h = z_pair;
    for (std::size_t i = 0; i + 1 < critic_w_.size(); ++i)
      h = relu(dense(h, critic_w_[i], critic_b_[i]));
    return dense(h, critic_w_.back(), critic_b_.back());
  }

  Tensor<T> critic_score(const Tensor<T>& z1, const Tensor<T>& z2) {
    return critic_score(concat_cols(z1, z2));
  }

  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  const ModelConfig& config() const { return cfg_; }

  // Parameters of the MI branch (stochastic head + critic); used by the
  // zero-gradient assertion when the MI loss is disabled.
  bool is_mi_param(const std::string& name) const {
    return name.rfind("head.", 0) == 0 || name.rfind("critic.", 0) == 0;
  }

 private:
  static T he_std(std::size_t fan_in) {
    return std::sqrt(T(2) / static_cast<T>(fan_in));
  }
  static T lin_std(std::size_t fan_in) {
    return std::sqrt(T(1) / static_cast<T>(fan_in));
  }

  Tensor<T> create_normal(const std::string& name, Shape shape, T std,
                          RngStream& rng) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < shape.size(); ++i) n *= shape[i];
    std::vector<T> data(n);
    for (T& v : data) v = static_cast<T>(rng.normal()) * std;
    return store_.create(name, std::move(shape), std::move(data));
  }

  Tensor<T> create_const(const std::string& name, Shape shape, T value) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < shape.size(); ++i) n *= shape[i];
    return store_.create(name, std::move(shape), std::vector<T>(n, value));
  }

  ModelConfig cfg_;
  ParamStore<T> store_;
  std::vector<Tensor<T>> conv_w_, bn_gamma_, bn_beta_;
  std::vector<BatchNormState<T>> bn_states_;  // sized once; addresses stable
  Tensor<T> cls_w_, cls_b_;
  Tensor<T> mean_w_, mean_b_, logvar_w_, logvar_b_;
  std::vector<Tensor<T>> critic_w_, critic_b_;
};

}  // namespace codial
