// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#include "codial/training.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "codial/config.hpp"
#include "codial/errors.hpp"
#include "codial/nn.hpp"
#include "codial/ops.hpp"

namespace codial {
namespace {

constexpr char kMagic[4] = {'C', 'D', 'L', '1'};
constexpr std::size_t kFixedHeaderBytes = 4 + 4 + 8;

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

}  // namespace

template <typename T>
StepPlan<T> make_step_plan(int batch, int views_per_image, int repr_dim,
                           int subset_k, unsigned seed, int epoch,
                           const std::vector<std::size_t>& dataset_indices,
                           std::uint64_t batch_index) {
  if (batch < 2)
    throw ConfigError("step plan: batch must be >= 2 for negative sampling");
  if (static_cast<int>(dataset_indices.size()) != batch)
    throw DimensionError("step plan: dataset_indices size " +
                         std::to_string(dataset_indices.size()) +
                         " != batch " + std::to_string(batch));
  StepPlan<T> plan;
  plan.views_per_image = views_per_image;
  const std::vector<ViewPairIndex> all_pairs = enumerate_pairs(views_per_image);
  plan.pairs.reserve(batch);
  plan.negatives.reserve(batch);
  for (int i = 0; i < batch; ++i) {
    RngStream pair_rng(seed, static_cast<std::uint64_t>(epoch),
                       dataset_indices[i], Purpose::kPairs);
    plan.pairs.push_back(sample_pair_subset(all_pairs, subset_k, pair_rng));
    RngStream neg_rng(seed, static_cast<std::uint64_t>(epoch),
                      dataset_indices[i], Purpose::kNegatives);
    plan.negatives.push_back(
        draw_negatives(batch, i, views_per_image, subset_k, neg_rng));
  }
  RngStream noise_rng(seed, static_cast<std::uint64_t>(epoch), batch_index,
                      Purpose::kNoise);
  const std::size_t rows =
      static_cast<std::size_t>(batch) * static_cast<std::size_t>(views_per_image);
  std::vector<T> noise(rows * static_cast<std::size_t>(repr_dim));
  for (T& v : noise) v = static_cast<T>(noise_rng.normal());
  plan.noise = Tensor<T>({rows, static_cast<std::size_t>(repr_dim)},
                         std::move(noise));
  return plan;
}

template <typename T>
StepLossResult<T> assemble_step_loss(CodialModel<T>& model,
                                     const Tensor<T>& views,
                                     const std::vector<int>& labels,
                                     const StepPlan<T>& plan,
                                     const LossWeights& weights, double beta,
                                     bool train) {
  const int batch = static_cast<int>(plan.pairs.size());
  const int views_per = plan.views_per_image;
  const std::size_t rows =
      static_cast<std::size_t>(batch) * static_cast<std::size_t>(views_per);
  if (views.rank() != 4 || views.dim(0) != rows)
    throw DimensionError("step loss: views must be (" + std::to_string(rows) +
                         ",S,S,C), got " + shape_str(views.shape()));
  if (labels.size() != rows)
    throw DimensionError("step loss: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " views");

  StepLossResult<T> res;
  EncodeResult<T> enc = model.encode(views, train);
  Tensor<T> logits = model.classify(enc.features);
  res.cls = softmax_cross_entropy(logits, labels);

  const std::vector<T>& lv = logits.values();
  const std::size_t classes = logits.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (lv[r * classes + c] > lv[r * classes + best]) best = c;
    if (static_cast<int>(best) == labels[r]) ++res.pretext_correct;
  }
  res.pretext_total = static_cast<int>(rows);

  if (weights.lambda_mi != 0.0) {
    res.has_mi = true;
    GaussianRepr<T> repr = model.project_stochastic(enc.features);
    Tensor<T> z = reparam(repr.mean, repr.logvar, plan.noise);
    std::vector<std::size_t> first_rows, second_rows, negative_rows;
    for (int i = 0; i < batch; ++i) {
      if (plan.negatives[i].size() != plan.pairs[i].size())
        throw DimensionError("step loss: negatives must be 1:1 with pairs");
      for (std::size_t p = 0; p < plan.pairs[i].size(); ++p) {
        const ViewPairIndex& pr = plan.pairs[i][p];
        const NegativeIndex& ng = plan.negatives[i][p];
        first_rows.push_back(static_cast<std::size_t>(i) * views_per + pr.first);
        second_rows.push_back(static_cast<std::size_t>(i) * views_per + pr.second);
        negative_rows.push_back(static_cast<std::size_t>(ng.image) * views_per +
                                ng.view);
      }
    }
    Tensor<T> z_first = gather_rows(z, first_rows);
    Tensor<T> z_second = gather_rows(z, second_rows);
    Tensor<T> z_neg = gather_rows(z, negative_rows);
    Tensor<T> pos_scores = model.critic_score(z_first, z_second);
    Tensor<T> neg_scores = model.critic_score(z_first, z_neg);
    Tensor<T> bound = js_mi_objective(pos_scores, neg_scores);
    res.mi_estimate = js_mi_estimate(pos_scores);
    GaussianRepr<T> ga{gather_rows(repr.mean, first_rows),
                       gather_rows(repr.logvar, first_rows)};
    GaussianRepr<T> gb{gather_rows(repr.mean, second_rows),
                       gather_rows(repr.logvar, second_rows)};
    Tensor<T> reg = mib_regularizer(ga, gb);
    res.kl_reg = reg.item();
    res.mi = mi_loss(bound, reg, static_cast<T>(beta));
    res.total = total_loss(res.cls, res.mi, weights);
  } else {
    if (weights.lambda_cls < 0)
      throw ConfigError("loss weights must be nonnegative");
    res.total = mul_scalar(res.cls, static_cast<T>(weights.lambda_cls));
  }
  return res;
}

void save_checkpoint(const CheckpointData& data, const std::string& path) {
  Json manifest;
  manifest["epoch"] = data.epoch;
  manifest["seed"] = data.seed;
  manifest["opt_step"] = data.opt_step;
  try {
    manifest["config"] = Json::parse(data.config_json);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("checkpoint config snapshot is not JSON: ") +
                      e.what());
  }
  Json tensors = Json::array();
  std::uint64_t offset = 0;
  for (const CheckpointTensor& t : data.tensors) {
    if (shape_numel(t.shape) != t.values.size())
      throw DimensionError("checkpoint tensor " + t.name + ": shape " +
                           shape_str(t.shape) + " does not match " +
                           std::to_string(t.values.size()) + " values");
    Json e;
    e["name"] = t.name;
    e["shape"] = t.shape;
    e["offset"] = offset;
    tensors.push_back(e);
    offset += t.values.size();
  }
  manifest["tensors"] = tensors;
  const std::string mstr = manifest.dump();

  std::string out;
  out.append(kMagic, 4);
  put_u32(out, data.version);
  put_u64(out, static_cast<std::uint64_t>(mstr.size()));
  out += mstr;
  for (const CheckpointTensor& t : data.tensors)
    for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint file: " + path);
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  const auto* buf = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < kFixedHeaderBytes)
    throw FormatError("checkpoint " + path + ": truncated header, expected " +
                      std::to_string(kFixedHeaderBytes) + " bytes, got " +
                      std::to_string(raw.size()));
  if (std::memcmp(buf, kMagic, 4) != 0)
    throw FormatError("checkpoint " + path + ": bad magic at byte offset 0");
  CheckpointData data;
  data.version = get_u32(buf + 4);
  if (data.version != kCheckpointVersion)
    throw FormatError("checkpoint " + path + ": unsupported version " +
                      std::to_string(data.version));
  const std::uint64_t mlen = get_u64(buf + 8);
  if (raw.size() < kFixedHeaderBytes + mlen)
    throw FormatError("checkpoint " + path + ": truncated manifest, expected " +
                      std::to_string(kFixedHeaderBytes + mlen) +
                      " bytes, got " + std::to_string(raw.size()));
  Json manifest;
  try {
    manifest = Json::parse(raw.substr(kFixedHeaderBytes, mlen));
  } catch (const Json::exception& e) {
    throw FormatError("checkpoint " + path + ": manifest parse error: " +
                      e.what());
  }
  try {
    data.epoch = manifest.at("epoch").get<int>();
    data.seed = manifest.at("seed").get<unsigned>();
    data.opt_step = manifest.at("opt_step").get<long long>();
    data.config_json = manifest.at("config").dump();
    const std::size_t blob_start = kFixedHeaderBytes + mlen;
    const std::size_t blob_floats = (raw.size() - blob_start) / 4;
    std::uint64_t expected_total = 0;
    for (const Json& e : manifest.at("tensors")) {
      CheckpointTensor t;
      t.name = e.at("name").get<std::string>();
      t.shape = e.at("shape").get<Shape>();
      const std::uint64_t off = e.at("offset").get<std::uint64_t>();
      const std::size_t n = shape_numel(t.shape);
      if (off + n > blob_floats)
        throw FormatError("checkpoint " + path + ": tensor " + t.name +
                          " needs bytes up to offset " +
                          std::to_string(blob_start + (off + n) * 4) +
                          ", file has " + std::to_string(raw.size()));
      t.values.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        t.values[i] =
            std::bit_cast<float>(get_u32(buf + blob_start + (off + i) * 4));
      expected_total = std::max(expected_total, off + n);
      data.tensors.push_back(std::move(t));
    }
    if (blob_start + expected_total * 4 != raw.size())
      throw FormatError("checkpoint " + path + ": expected " +
                        std::to_string(blob_start + expected_total * 4) +
                        " bytes, got " + std::to_string(raw.size()));
  } catch (const Json::exception& e) {
    throw FormatError("checkpoint " + path + ": bad manifest field: " +
                      e.what());
  }
  return data;
}

template <typename T>
CheckpointData snapshot_checkpoint(const CodialModel<T>& model,
                                   const Optimizer<T>* opt, int epoch,
                                   unsigned seed,
                                   const std::string& config_json) {
  CheckpointData data;
  data.epoch = epoch;
  data.seed = seed;
  data.config_json = config_json;
  const ParamStore<T>& store = model.params();
  for (const auto& e : store.params()) {
    CheckpointTensor t;
    t.name = e.name;
    t.shape = e.value.shape();
    const std::vector<T>& src = e.value.values();
    t.values.assign(src.begin(), src.end());
    data.tensors.push_back(std::move(t));
  }
  for (const auto& s : store.state()) {
    CheckpointTensor t;
    t.name = s.name;
    t.shape = {s.buf->size()};
    t.values.assign(s.buf->begin(), s.buf->end());
    data.tensors.push_back(std::move(t));
  }
  if (opt != nullptr) {
    data.opt_step = opt->step_count();
    for (const auto& [key, vec] : opt->slots()) {
      CheckpointTensor t;
      t.name = "opt." + key;
      t.shape = {vec.size()};
      t.values.assign(vec.begin(), vec.end());
      data.tensors.push_back(std::move(t));
    }
  }
  return data;
}

namespace {

const CheckpointTensor* find_tensor(const CheckpointData& data,
                                    const std::string& name) {
  for (const CheckpointTensor& t : data.tensors)
    if (t.name == name) return &t;
  return nullptr;
}

}  // namespace

template <typename T>
void restore_model(CodialModel<T>& model, const CheckpointData& data) {
  ParamStore<T>& store = model.params();
  for (auto& e : store.params()) {
    const CheckpointTensor* t = find_tensor(data, e.name);
    if (t == nullptr)
      throw FormatError("checkpoint missing parameter: " + e.name);
    if (t->shape != e.value.shape())
      throw DimensionError("checkpoint parameter " + e.name + ": shape " +
                           shape_str(t->shape) + " != model shape " +
                           shape_str(e.value.shape()));
    std::vector<T>& dst = e.value.values_mut();
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = static_cast<T>(t->values[i]);
  }
  for (auto& s : store.state()) {
    const CheckpointTensor* t = find_tensor(data, s.name);
    if (t == nullptr) throw FormatError("checkpoint missing state: " + s.name);
    if (t->values.size() != s.buf->size())
      throw DimensionError("checkpoint state " + s.name + ": size " +
                           std::to_string(t->values.size()) + " != " +
                           std::to_string(s.buf->size()));
    for (std::size_t i = 0; i < s.buf->size(); ++i)
      (*s.buf)[i] = static_cast<T>(t->values[i]);
  }
}

template <typename T>
void restore_optimizer(Optimizer<T>& opt, const CheckpointData& data) {
  opt.set_step_count(data.opt_step);
  opt.slots().clear();
  for (const CheckpointTensor& t : data.tensors) {
    if (t.name.rfind("opt.", 0) != 0) continue;
    std::vector<T> vals(t.values.begin(), t.values.end());
    opt.slots()[t.name.substr(4)] = std::move(vals);
  }
}

ModelConfig model_config_from_checkpoint(const CheckpointData& data) {
  Json j;
  try {
    j = Json::parse(data.config_json);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("checkpoint config snapshot is not JSON: ") +
                      e.what());
  }
  if (!j.is_object() || !j.contains("model"))
    throw ConfigError("checkpoint config snapshot has no model section");
  ModelConfig mc;
  config_from_json(j.at("model"), mc);
  return mc;
}

namespace {

void append_view_pixels(const Image& img, int out_size, int channels,
                        std::vector<float>& out) {
  if (img.height != out_size || img.width != out_size ||
      img.channels != channels)
    throw DimensionError("pretrain: view is " + std::to_string(img.height) +
                         "x" + std::to_string(img.width) + "x" +
                         std::to_string(img.channels) + ", expected " +
                         std::to_string(out_size) + "x" +
                         std::to_string(out_size) + "x" +
                         std::to_string(channels));
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
}

double eval_pretext_accuracy(CodialModel<float>& model, const Dataset& ds,
                             const AuxConfig& aux, unsigned seed,
                             int chunk_images) {
  NoGradGuard no_grad;
  const int views_per = kPrimaryClassCount;
  const int s = aux.out_size;
  const int c = model.config().encoder.in_channels;
  long correct = 0, total = 0;
  for (std::size_t start = 0; start < ds.images.size();
       start += static_cast<std::size_t>(chunk_images)) {
    const std::size_t end =
        std::min(ds.images.size(), start + static_cast<std::size_t>(chunk_images));
    std::vector<float> pixels;
    std::vector<int> labels;
    pixels.reserve((end - start) * views_per * static_cast<std::size_t>(s) * s * c);
    for (std::size_t idx = start; idx < end; ++idx) {
      // Evaluation views are pinned to epoch 0 so the held-out set is fixed
      // across epochs and runs.
      RngStream rng(seed, 0, idx, Purpose::kEvalViews);
      for (const LabeledView& v : make_views(ds.images[idx], aux, rng)) {
        append_view_pixels(v.image, s, c, pixels);
        labels.push_back(v.label);
      }
    }
    const std::size_t rows = (end - start) * views_per;
    Tensor<float> views({rows, static_cast<std::size_t>(s),
                         static_cast<std::size_t>(s), static_cast<std::size_t>(c)},
                        std::move(pixels));
    EncodeResult<float> enc = model.encode(views, /*train=*/false);
    Tensor<float> logits = model.classify(enc.features);
    const std::vector<float>& lv = logits.values();
    const std::size_t classes = logits.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < classes; ++k)
        if (lv[r * classes + k] > lv[r * classes + best]) best = k;
      if (static_cast<int>(best) == labels[r]) ++correct;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / total;
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("pretrain: epochs must be >= 1");
  if (cfg.batch_size < 2)
    throw ConfigError("pretrain: batch_size must be >= 2 "
                      "(negatives require another image)");
  if (cfg.weights.lambda_cls < 0 || cfg.weights.lambda_mi < 0)
    throw ConfigError("pretrain: loss weights must be nonnegative");
  const int max_pairs =
      kPrimaryClassCount * (kPrimaryClassCount - 1) / 2;
  if (cfg.pair_subset_k < 1 || cfg.pair_subset_k > max_pairs)
    throw ConfigError("pretrain: pair_subset_k must be in [1, " +
                      std::to_string(max_pairs) + "]");
  if (cfg.aux.out_size != cfg.model.encoder.input_size)
    throw ConfigError("pretrain: aux.out_size " +
                      std::to_string(cfg.aux.out_size) +
                      " must match encoder.input_size " +
                      std::to_string(cfg.model.encoder.input_size));
  if (cfg.model.num_classes != kPrimaryClassCount)
    throw ConfigError("pretrain: num_classes must be " +
                      std::to_string(kPrimaryClassCount));
  if (cfg.train_path.empty() || cfg.eval_path.empty())
    throw ConfigError("pretrain: train_path and eval_path are required");
}

}  // namespace

PretrainResult pretrain(const TrainConfig& cfg, const std::string& resume_path) {
  validate_train_config(cfg);
  Dataset train = load_dataset(cfg.train_path);
  Dataset held_out = load_dataset(cfg.eval_path);
  const int in_channels = cfg.model.encoder.in_channels;
  if (static_cast<int>(train.header.channels) != in_channels ||
      static_cast<int>(held_out.header.channels) != in_channels)
    throw ConfigError("pretrain: dataset channels do not match the encoder");
  if (train.images.size() < 2)
    throw DegenerateBatchError("pretrain: need at least 2 training images");

  std::filesystem::create_directories(cfg.output_dir);
  PretrainResult result;
  result.checkpoint_path =
      (std::filesystem::path(cfg.output_dir) / "checkpoint.cdl").string();
  result.metrics_path =
      (std::filesystem::path(cfg.output_dir) / "metrics.jsonl").string();

  RngStream init_rng(cfg.seed, 0, 0, Purpose::kInit);
  CodialModel<float> model(cfg.model, init_rng);
  Optimizer<float> opt(cfg.optimizer);
  int start_epoch = 0;
  if (!resume_path.empty()) {
    CheckpointData ckpt = load_checkpoint(resume_path);
    if (ckpt.seed != cfg.seed)
      throw ConfigError("pretrain: resume seed " + std::to_string(ckpt.seed) +
                        " does not match config seed " +
                        std::to_string(cfg.seed));
    restore_model(model, ckpt);
    restore_optimizer(opt, ckpt);
    start_epoch = ckpt.epoch;
  }
  if (start_epoch > cfg.epochs)
    throw ConfigError("pretrain: checkpoint epoch " +
                      std::to_string(start_epoch) + " is past target " +
                      std::to_string(cfg.epochs));

  std::ofstream metrics(result.metrics_path,
                        start_epoch > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics) throw IoError("cannot open for writing: " + result.metrics_path);
  const std::string cfg_json = config_to_json(cfg).dump();

  const int views_per = kPrimaryClassCount;
  const int s = cfg.aux.out_size;
  const bool with_mi = cfg.weights.lambda_mi != 0.0;

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(train.images.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle_rng(cfg.seed, static_cast<std::uint64_t>(epoch), 0,
                          Purpose::kShuffle);
    shuffle_rng.shuffle(order);

    const double beta = beta_at(cfg.beta, epoch);
    double sum_total = 0, sum_cls = 0, sum_mi = 0, sum_est = 0, sum_reg = 0;
    int steps = 0;
    std::uint64_t batch_index = 0;
    // A trailing single image cannot form negatives and is skipped.
    for (std::size_t start = 0; start + 1 < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t bsz = std::min<std::size_t>(
          static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      if (bsz < 2) break;
      const std::vector<std::size_t> ds_idx(order.begin() + start,
                                            order.begin() + start + bsz);
      std::vector<float> pixels;
      std::vector<int> labels;
      pixels.reserve(bsz * views_per * static_cast<std::size_t>(s) * s *
                     in_channels);
      labels.reserve(bsz * views_per);
      for (std::size_t idx : ds_idx) {
        RngStream view_rng(cfg.seed, static_cast<std::uint64_t>(epoch), idx,
                           Purpose::kViews);
        for (const LabeledView& v :
             make_views(train.images[idx], cfg.aux, view_rng)) {
          append_view_pixels(v.image, s, in_channels, pixels);
          labels.push_back(v.label);
        }
      }
      Tensor<float> views({bsz * views_per, static_cast<std::size_t>(s),
                           static_cast<std::size_t>(s),
                           static_cast<std::size_t>(in_channels)},
                          std::move(pixels));
      StepPlan<float> plan = make_step_plan<float>(
          static_cast<int>(bsz), views_per, cfg.model.repr_dim,
          cfg.pair_subset_k, cfg.seed, epoch, ds_idx, batch_index);
      StepLossResult<float> res = assemble_step_loss(
          model, views, labels, plan, cfg.weights, beta, /*train=*/true);
      const double total_value = res.total.item();
      if (!std::isfinite(total_value)) {
        const double cls_value = res.cls.item();
        throw NumericError(
            "pretrain: non-finite loss at epoch " + std::to_string(epoch) +
            " batch " + std::to_string(batch_index) + " (loss_total=" +
            std::to_string(total_value) + ", loss_cls=" +
            std::to_string(cls_value) +
            (res.has_mi ? ", loss_mi=" + std::to_string(res.mi.item()) : "") +
            ")");
      }
      model.params().zero_grad();
      res.total.backward();
      if (!with_mi) {
        // The bottleneck head and critic sit outside the graph here; any
        // gradient reaching them indicates a wiring bug.
        for (const auto& e : model.params().params())
          if (model.is_mi_param(e.name) && e.value.has_grad())
            throw NumericError("pretrain: MI parameter " + e.name +
                               " received gradient with lambda_mi == 0");
      }
      opt.step(model.params());
      sum_total += total_value;
      sum_cls += res.cls.item();
      if (res.has_mi) {
        sum_mi += res.mi.item();
        sum_est += res.mi_estimate;
        sum_reg += res.kl_reg;
      }
      ++steps;
      ++batch_index;
    }
    if (steps == 0)
      throw DegenerateBatchError("pretrain: no full batch in epoch " +
                                 std::to_string(epoch));

    const double acc = eval_pretext_accuracy(model, held_out, cfg.aux, cfg.seed,
                                             cfg.batch_size);
    Json line;
    line["epoch"] = epoch;
    line["loss_total"] = sum_total / steps;
    line["loss_cls"] = sum_cls / steps;
    if (with_mi) {
      line["loss_mi"] = sum_mi / steps;
      line["mi_estimate"] = sum_est / steps;
      line["kl_reg"] = sum_reg / steps;
    }
    line["beta"] = beta;
    line["pretext_acc"] = acc;
    metrics << line.dump() << "\n";
    metrics.flush();
    result.epoch_loss_total.push_back(sum_total / steps);
    result.epoch_pretext_acc.push_back(acc);
  }

  CheckpointData snap =
      snapshot_checkpoint(model, &opt, cfg.epochs, cfg.seed, cfg_json);
  save_checkpoint(snap, result.checkpoint_path);
  return result;
}

template StepPlan<float> make_step_plan<float>(
    int, int, int, int, unsigned, int, const std::vector<std::size_t>&,
    std::uint64_t);
template StepPlan<double> make_step_plan<double>(
    int, int, int, int, unsigned, int, const std::vector<std::size_t>&,
    std::uint64_t);
template StepLossResult<float> assemble_step_loss<float>(
    CodialModel<float>&, const Tensor<float>&, const std::vector<int>&,
    const StepPlan<float>&, const LossWeights&, double, bool);
template StepLossResult<double> assemble_step_loss<double>(
    CodialModel<double>&, const Tensor<double>&, const std::vector<int>&,
    const StepPlan<double>&, const LossWeights&, double, bool);
template CheckpointData snapshot_checkpoint<float>(const CodialModel<float>&,
                                                   const Optimizer<float>*, int,
                                                   unsigned,
                                                   const std::string&);
template CheckpointData snapshot_checkpoint<double>(const CodialModel<double>&,
                                                    const Optimizer<double>*,
                                                    int, unsigned,
                                                    const std::string&);
template void restore_model<float>(CodialModel<float>&, const CheckpointData&);
template void restore_model<double>(CodialModel<double>&,
                                    const CheckpointData&);
template void restore_optimizer<float>(Optimizer<float>&,
                                       const CheckpointData&);
template void restore_optimizer<double>(Optimizer<double>&,
                                        const CheckpointData&);

}  // namespace codial
