// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codial/dataset.hpp"
#include "codial/losses.hpp"
#include "codial/models.hpp"
#include "codial/optimizer.hpp"
#include "codial/pairing.hpp"
#include "codial/rng.hpp"
#include "codial/tensor.hpp"
#include "codial/transforms.hpp"

namespace codial {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;  // must be >= 2: negatives need another image
  unsigned seed = 0;
  OptimizerConfig optimizer;
  LossWeights weights;
  // Desk-scale ramp; the reference 10/100 schedule stays available via config.
  BetaSchedule beta{1e-6, 1.0, 3, 10};
  AuxConfig aux;
  ModelConfig model;
  int pair_subset_k = 10;  // of the C(5,2) = 10 view pairs per image
  std::string train_path;
  std::string eval_path;  // held-out split for pretext accuracy
  std::string output_dir = "out";
};

// All randomness for one optimization step, drawn up front so the loss
// assembly itself is a pure function of (parameters, views, plan).
template <typename T>
struct StepPlan {
  int views_per_image = kPrimaryClassCount;
  std::vector<std::vector<ViewPairIndex>> pairs;      // [batch][subset_k]
  std::vector<std::vector<NegativeIndex>> negatives;  // [batch][subset_k], 1:1
  Tensor<T> noise;                                    // (batch*views, repr_dim)
};

// Streams are keyed per sample (dataset index) for pairs/negatives and per
// batch for reparameterization noise.
template <typename T>
StepPlan<T> make_step_plan(int batch, int views_per_image, int repr_dim,
                           int subset_k, unsigned seed, int epoch,
                           const std::vector<std::size_t>& dataset_indices,
                           std::uint64_t batch_index);

template <typename T>
struct StepLossResult {
  Tensor<T> total;  // graph root
  Tensor<T> cls;
  Tensor<T> mi;  // only when has_mi
  T mi_estimate = T(0);
  T kl_reg = T(0);
  int pretext_correct = 0;
  int pretext_total = 0;
  bool has_mi = false;
};

// views is (batch*views_per_image, S, S, C) grouped per image; labels hold the
// primary class of each row. With lambda_mi == 0 the entire MI branch (head,
// critic, sampling) is skipped, so those parameters receive no gradient.
template <typename T>
StepLossResult<T> assemble_step_loss(CodialModel<T>& model,
                                     const Tensor<T>& views,
                                     const std::vector<int>& labels,
                                     const StepPlan<T>& plan,
                                     const LossWeights& weights, double beta,
                                     bool train);

// Checkpoint file: magic "CDL1", version u32 LE, manifest length u64 LE,
// UTF-8 JSON manifest, then float32 LE blobs in manifest order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct CheckpointData {
  std::uint32_t version = kCheckpointVersion;
  int epoch = 0;  // completed epochs
  unsigned seed = 0;
  long long opt_step = 0;
  std::string config_json = "{}";  // resolved TrainConfig snapshot
  std::vector<CheckpointTensor> tensors;
};

void save_checkpoint(const CheckpointData& data, const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

// Parameters and registered state in creation order, then optimizer slots
// under "opt.<slot>"; pass opt == nullptr to omit optimizer state.
template <typename T>
CheckpointData snapshot_checkpoint(const CodialModel<T>& model,
                                   const Optimizer<T>* opt, int epoch,
                                   unsigned seed,
                                   const std::string& config_json);

template <typename T>
void restore_model(CodialModel<T>& model, const CheckpointData& data);

template <typename T>
void restore_optimizer(Optimizer<T>& opt, const CheckpointData& data);

// Rebuilds the model recorded in a checkpoint's config snapshot.
ModelConfig model_config_from_checkpoint(const CheckpointData& data);

struct PretrainResult {
  std::string checkpoint_path;
  std::string metrics_path;
  std::vector<double> epoch_loss_total;
  std::vector<double> epoch_pretext_acc;
};

// Full pretraining; resume_path == "" starts fresh, otherwise continues the
// checkpointed run through cfg.epochs (identical trajectory to an
// uninterrupted run with the same seed).
PretrainResult pretrain(const TrainConfig& cfg,
                        const std::string& resume_path = "");

}  // namespace codial
