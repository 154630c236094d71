// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "codial/config.hpp"
#include "codial/errors.hpp"
#include "codial/gradcheck.hpp"
#include "codial/rng.hpp"
#include "codial/synthetic.hpp"
#include "codial/training.hpp"

using namespace codial;

namespace {

std::string tmp_dir() {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("codial_training_test_" + std::to_string(counter++));
  std::filesystem::create_directories(p);
  return p.string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(static_cast<bool>(in));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::vector<std::string> json_keys(const std::string& line) {
  Json j = Json::parse(line);
  std::vector<std::string> keys;
  for (const auto& item : j.items()) keys.push_back(item.key());
  return keys;
}

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

template <typename T>
Tensor<T> random_views(int rows, int size, int channels, unsigned seed) {
  RngStream rng(seed, 0, 0, Purpose::kOracle);
  std::vector<T> v(static_cast<std::size_t>(rows) * size * size * channels);
  for (T& x : v) x = static_cast<T>(rng.uniform01());
  return Tensor<T>({static_cast<std::size_t>(rows),
                    static_cast<std::size_t>(size),
                    static_cast<std::size_t>(size),
                    static_cast<std::size_t>(channels)},
                   std::move(v));
}

// Batch-norm running stats mutate on train-mode forwards; snapshotting them
// keeps repeated loss evaluations pure during finite differences.
template <typename T>
class StateGuard {
 public:
  explicit StateGuard(ParamStore<T>& store) : store_(store) {
    for (const auto& s : store.state()) saved_.push_back(*s.buf);
  }
  void restore() {
    for (std::size_t i = 0; i < saved_.size(); ++i)
      *store_.state()[i].buf = saved_[i];
  }

 private:
  ParamStore<T>& store_;
  std::vector<std::vector<T>> saved_;
};

TrainConfig tiny_train_config(const std::string& data_dir,
                              const std::string& out_dir) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 5;
  cfg.aux.out_size = 16;
  cfg.model = tiny_model();
  cfg.train_path = data_dir + "/train.cdld";
  cfg.eval_path = data_dir + "/test.cdld";
  cfg.output_dir = out_dir;
  return cfg;
}

// Shared tiny dataset for the pretrain tests.
const std::string& shared_data_dir() {
  static std::string dir = [] {
    SyntheticShapesSpec spec;
    spec.image_size = 16;
    spec.scale_min = 0.4;  // keeps the 6px-at-64 radius floor satisfied
    spec.scale_max = 0.45;
    spec.position_jitter = 0.02;
    spec.per_class_count = 10;
    spec.seed = 17;
    const std::string d = tmp_dir();
    gen_synthetic(spec, d);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("step plans are shaped, in range, and deterministic") {
  const std::vector<std::size_t> ds_idx = {40, 7, 19, 3};
  StepPlan<float> plan =
      make_step_plan<float>(4, 5, 8, 3, /*seed=*/9, /*epoch=*/2, ds_idx, 11);
  REQUIRE(plan.pairs.size() == 4);
  REQUIRE(plan.negatives.size() == 4);
  CHECK(plan.noise.shape() == Shape{20, 8});
  for (int i = 0; i < 4; ++i) {
    REQUIRE(plan.pairs[i].size() == 3);
    REQUIRE(plan.negatives[i].size() == 3);
    for (const ViewPairIndex& p : plan.pairs[i]) {
      CHECK(p.first < p.second);
      CHECK(p.second < 5);
    }
    for (const NegativeIndex& n : plan.negatives[i]) {
      CHECK(n.image != i);  // negatives come from other images
      CHECK(n.image < 4);
      CHECK(n.view < 5);
    }
  }
  StepPlan<float> again =
      make_step_plan<float>(4, 5, 8, 3, 9, 2, ds_idx, 11);
  CHECK(again.noise.values() == plan.noise.values());
  for (int i = 0; i < 4; ++i) {
    CHECK(again.pairs[i] == plan.pairs[i]);
    CHECK(again.negatives[i] == plan.negatives[i]);
  }
  StepPlan<float> other =
      make_step_plan<float>(4, 5, 8, 3, 9, 3, ds_idx, 11);
  CHECK(other.noise.values() != plan.noise.values());

  CHECK_THROWS_AS(make_step_plan<float>(1, 5, 8, 3, 9, 2, {0}, 0), ConfigError);
  CHECK_THROWS_AS(make_step_plan<float>(4, 5, 8, 3, 9, 2, {0, 1}, 0),
                  DimensionError);
}

TEST_CASE("step loss splits into weighted classification and MI terms") {
  RngStream init(3, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_model(), init);
  Tensor<float> views = random_views<float>(10, 16, 3, 4);
  std::vector<int> labels = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  StepPlan<float> plan = make_step_plan<float>(2, 5, 8, 4, 1, 0, {0, 1}, 0);

  LossWeights w;
  w.lambda_cls = 1.2;
  w.lambda_mi = 0.7;
  StateGuard<float> guard(model.params());
  StepLossResult<float> res =
      assemble_step_loss(model, views, labels, plan, w, 0.25, true);
  guard.restore();
  REQUIRE(res.has_mi);
  CHECK(res.total.item() ==
        doctest::Approx(1.2 * res.cls.item() + 0.7 * res.mi.item())
            .epsilon(1e-5));
  CHECK(res.pretext_total == 10);
  CHECK(std::isfinite(res.mi_estimate));
  CHECK(res.kl_reg >= 0.0f);

  // Identical inputs reproduce identical losses.
  StepLossResult<float> res2 =
      assemble_step_loss(model, views, labels, plan, w, 0.25, true);
  guard.restore();
  CHECK(res2.total.item() == res.total.item());
}

TEST_CASE("lambda_mi = 0 skips the MI branch and its parameters get no grad") {
  RngStream init(3, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_model(), init);
  Tensor<float> views = random_views<float>(10, 16, 3, 4);
  std::vector<int> labels = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  StepPlan<float> plan = make_step_plan<float>(2, 5, 8, 4, 1, 0, {0, 1}, 0);
  LossWeights w;
  w.lambda_cls = 1.0;
  w.lambda_mi = 0.0;
  StepLossResult<float> res =
      assemble_step_loss(model, views, labels, plan, w, 0.5, true);
  CHECK_FALSE(res.has_mi);
  model.params().zero_grad();
  res.total.backward();
  int encoder_with_grad = 0;
  for (const auto& e : model.params().params()) {
    if (model.is_mi_param(e.name)) {
      CHECK_FALSE(e.value.has_grad());
    } else if (e.value.has_grad()) {
      ++encoder_with_grad;
    }
  }
  CHECK(encoder_with_grad > 0);
}

TEST_CASE("full training loss passes a finite-difference gradient check") {
  RngStream init(12, 0, 0, Purpose::kInit);
  CodialModel<double> model(tiny_model(), init);
  Tensor<double> views = random_views<double>(10, 16, 3, 21);
  const std::vector<int> labels = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  StepPlan<double> plan = make_step_plan<double>(2, 5, 8, 3, 8, 0, {0, 1}, 0);
  LossWeights w;
  w.lambda_cls = 1.2;
  w.lambda_mi = 0.7;
  const double beta = 0.37;

  auto value_fn = [&]() {
    StateGuard<double> guard(model.params());
    NoGradGuard no_grad;
    StepLossResult<double> r =
        assemble_step_loss(model, views, labels, plan, w, beta, true);
    guard.restore();
    return static_cast<double>(r.total.item());
  };

  StateGuard<double> guard(model.params());
  StepLossResult<double> res =
      assemble_step_loss(model, views, labels, plan, w, beta, true);
  model.params().zero_grad();
  res.total.backward();
  guard.restore();

  for (auto& e : model.params().params()) {
    REQUIRE(e.value.has_grad());
    const std::vector<double> analytic = e.value.grad();
    const double worst = finite_diff_gradcheck_values<double>(
        value_fn, e.value.values_mut(), analytic, 1e-5);
    INFO("param ", e.name);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("checkpoints round trip bit-exactly") {
  RngStream init(7, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_model(), init);
  Optimizer<float> opt(OptimizerConfig{});

  // One real step populates optimizer slots and running stats.
  Tensor<float> views = random_views<float>(10, 16, 3, 2);
  std::vector<int> labels = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  StepPlan<float> plan = make_step_plan<float>(2, 5, 8, 4, 1, 0, {0, 1}, 0);
  StepLossResult<float> res = assemble_step_loss(
      model, views, labels, plan, LossWeights{}, 0.1, true);
  model.params().zero_grad();
  res.total.backward();
  opt.step(model.params());

  const std::string dir = tmp_dir();
  const std::string p1 = dir + "/a.cdl", p2 = dir + "/b.cdl";
  CheckpointData snap = snapshot_checkpoint(model, &opt, 3, 7, "{\"epochs\":3}");
  save_checkpoint(snap, p1);
  CheckpointData back = load_checkpoint(p1);
  CHECK(back.epoch == 3);
  CHECK(back.seed == 7);
  CHECK(back.opt_step == 1);
  CHECK(back.config_json == "{\"epochs\":3}");
  REQUIRE(back.tensors.size() == snap.tensors.size());
  for (std::size_t i = 0; i < back.tensors.size(); ++i) {
    CHECK(back.tensors[i].name == snap.tensors[i].name);
    CHECK(back.tensors[i].shape == snap.tensors[i].shape);
    CHECK(back.tensors[i].values == snap.tensors[i].values);
  }
  save_checkpoint(back, p2);
  CHECK(read_bytes(p1) == read_bytes(p2));

  // Restoring into a fresh model/optimizer reproduces every buffer.
  RngStream init2(8, 0, 0, Purpose::kInit);
  CodialModel<float> fresh(tiny_model(), init2);
  Optimizer<float> fresh_opt(OptimizerConfig{});
  restore_model(fresh, back);
  restore_optimizer(fresh_opt, back);
  for (std::size_t i = 0; i < fresh.params().params().size(); ++i)
    CHECK(fresh.params().params()[i].value.values() ==
          model.params().params()[i].value.values());
  for (std::size_t i = 0; i < fresh.params().state().size(); ++i)
    CHECK(*fresh.params().state()[i].buf == *model.params().state()[i].buf);
  CHECK(fresh_opt.step_count() == 1);
  CHECK(fresh_opt.slots() == opt.slots());
}

TEST_CASE("corrupt checkpoints fail with format errors") {
  RngStream init(7, 0, 0, Purpose::kInit);
  CodialModel<float> model(tiny_model(), init);
  const std::string dir = tmp_dir();
  const std::string path = dir + "/ok.cdl";
  save_checkpoint(snapshot_checkpoint<float>(model, nullptr, 1, 0, "{}"), path);
  const std::string full = read_bytes(path);

  auto write_bytes = [&](const std::string& p, const std::string& b) {
    std::ofstream os(p, std::ios::binary);
    os.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  SUBCASE("bad magic") {
    std::string bad = full;
    bad[0] = 'Z';
    write_bytes(dir + "/magic.cdl", bad);
    CHECK_THROWS_AS(load_checkpoint(dir + "/magic.cdl"), FormatError);
  }
  SUBCASE("bad version") {
    std::string bad = full;
    bad[4] = 9;
    write_bytes(dir + "/ver.cdl", bad);
    CHECK_THROWS_AS(load_checkpoint(dir + "/ver.cdl"), FormatError);
  }
  SUBCASE("truncated blob names expected and actual sizes") {
    write_bytes(dir + "/trunc.cdl", full.substr(0, full.size() - 3));
    try {
      load_checkpoint(dir + "/trunc.cdl");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(std::to_string(full.size() - 3)) !=
            std::string::npos);
    }
  }
  SUBCASE("truncated manifest") {
    write_bytes(dir + "/mtrunc.cdl", full.substr(0, 20));
    CHECK_THROWS_AS(load_checkpoint(dir + "/mtrunc.cdl"), FormatError);
  }
  SUBCASE("missing file is an IO error") {
    CHECK_THROWS_AS(load_checkpoint(dir + "/none.cdl"), IoError);
  }
  SUBCASE("restore rejects a missing parameter") {
    CheckpointData d = load_checkpoint(path);
    d.tensors.erase(d.tensors.begin());
    CHECK_THROWS_AS(restore_model(model, d), FormatError);
  }
  SUBCASE("restore rejects a shape mismatch") {
    CheckpointData d = load_checkpoint(path);
    d.tensors[0].shape = {1, 1};
    d.tensors[0].values = {0.0f};
    CHECK_THROWS_AS(restore_model(model, d), DimensionError);
  }
}

TEST_CASE("pretrain writes metrics and a loadable checkpoint") {
  const std::string out = tmp_dir();
  TrainConfig cfg = tiny_train_config(shared_data_dir(), out);
  PretrainResult res = pretrain(cfg);
  CHECK(res.epoch_loss_total.size() == 2);
  for (double v : res.epoch_loss_total) CHECK(std::isfinite(v));

  const std::vector<std::string> lines = read_lines(res.metrics_path);
  REQUIRE(lines.size() == 2);
  const std::vector<std::string> expected = {
      "epoch",       "loss_total", "loss_cls", "loss_mi",
      "mi_estimate", "kl_reg",     "beta",     "pretext_acc"};
  for (const std::string& line : lines) CHECK(json_keys(line) == expected);
  Json first = Json::parse(lines[0]);
  CHECK(first["epoch"] == 0);
  CHECK(first["beta"].get<double>() == doctest::Approx(1e-6));

  CheckpointData ckpt = load_checkpoint(res.checkpoint_path);
  CHECK(ckpt.epoch == 2);
  CHECK(ckpt.seed == 5);
  CHECK(ckpt.opt_step == 8);  // 32 images / batch 8 = 4 steps x 2 epochs
  ModelConfig mc = model_config_from_checkpoint(ckpt);
  CHECK(mc.encoder.input_size == 16);
  CHECK(mc.encoder.stages.size() == 2);
}

TEST_CASE("lambda_mi = 0 omits the MI metrics fields") {
  const std::string out = tmp_dir();
  TrainConfig cfg = tiny_train_config(shared_data_dir(), out);
  cfg.epochs = 1;
  cfg.weights.lambda_mi = 0.0;
  PretrainResult res = pretrain(cfg);
  const std::vector<std::string> lines = read_lines(res.metrics_path);
  REQUIRE(lines.size() == 1);
  const std::vector<std::string> expected = {"epoch", "loss_total", "loss_cls",
                                             "beta", "pretext_acc"};
  CHECK(json_keys(lines[0]) == expected);
}

TEST_CASE("identical seeds give byte-identical metrics and checkpoints") {
  const std::string out = tmp_dir();
  TrainConfig cfg = tiny_train_config(shared_data_dir(), out);
  PretrainResult first = pretrain(cfg);
  const std::string metrics1 = read_bytes(first.metrics_path);
  const std::string ckpt1 = read_bytes(first.checkpoint_path);
  PretrainResult second = pretrain(cfg);
  CHECK(read_bytes(second.metrics_path) == metrics1);
  CHECK(read_bytes(second.checkpoint_path) == ckpt1);

  TrainConfig other = cfg;
  other.seed = 6;
  other.output_dir = tmp_dir();
  PretrainResult third = pretrain(other);
  CHECK(read_bytes(third.metrics_path) != metrics1);
}

TEST_CASE("resuming reproduces the uninterrupted trajectory") {
  TrainConfig cfg_full = tiny_train_config(shared_data_dir(), tmp_dir());
  cfg_full.epochs = 4;
  PretrainResult full = pretrain(cfg_full);

  TrainConfig cfg_half = tiny_train_config(shared_data_dir(), tmp_dir());
  cfg_half.epochs = 2;
  PretrainResult half = pretrain(cfg_half);
  TrainConfig cfg_resume = cfg_half;
  cfg_resume.epochs = 4;
  PretrainResult resumed = pretrain(cfg_resume, half.checkpoint_path);

  // Epoch-by-epoch metrics match the uninterrupted run exactly.
  CHECK(read_bytes(resumed.metrics_path) == read_bytes(full.metrics_path));

  // Both checkpoints hold identical tensors (config snapshots differ only in
  // output_dir, so compare contents rather than bytes).
  CheckpointData a = load_checkpoint(full.checkpoint_path);
  CheckpointData b = load_checkpoint(resumed.checkpoint_path);
  CHECK(a.epoch == b.epoch);
  CHECK(a.opt_step == b.opt_step);
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    CHECK(a.tensors[i].name == b.tensors[i].name);
    CHECK(a.tensors[i].values == b.tensors[i].values);
  }
}

TEST_CASE("resume guards reject mismatched runs") {
  TrainConfig cfg = tiny_train_config(shared_data_dir(), tmp_dir());
  cfg.epochs = 1;
  PretrainResult res = pretrain(cfg);

  SUBCASE("seed mismatch") {
    TrainConfig bad = cfg;
    bad.seed = 99;
    CHECK_THROWS_AS(pretrain(bad, res.checkpoint_path), ConfigError);
  }
  SUBCASE("checkpoint past the target epoch") {
    TrainConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(pretrain(bad, res.checkpoint_path), ConfigError);
  }
}

TEST_CASE("the NaN watchdog reports the offending epoch and batch") {
  TrainConfig cfg = tiny_train_config(shared_data_dir(), tmp_dir());
  cfg.epochs = 1;
  PretrainResult res = pretrain(cfg);

  CheckpointData ckpt = load_checkpoint(res.checkpoint_path);
  for (CheckpointTensor& t : ckpt.tensors)
    if (t.name == "cls.w")
      for (float& v : t.values) v = std::numeric_limits<float>::quiet_NaN();
  const std::string poisoned = tmp_dir() + "/poisoned.cdl";
  save_checkpoint(ckpt, poisoned);

  TrainConfig resume = cfg;
  resume.epochs = 2;
  try {
    pretrain(resume, poisoned);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch 0") != std::string::npos);
  }
}

TEST_CASE("config validation rejects broken setups") {
  TrainConfig cfg = tiny_train_config(shared_data_dir(), tmp_dir());
  SUBCASE("batch too small") {
    cfg.batch_size = 1;
    CHECK_THROWS_AS(pretrain(cfg), ConfigError);
  }
  SUBCASE("pair subset out of range") {
    cfg.pair_subset_k = 11;
    CHECK_THROWS_AS(pretrain(cfg), ConfigError);
  }
  SUBCASE("aux size disagrees with the encoder") {
    cfg.aux.out_size = 32;
    CHECK_THROWS_AS(pretrain(cfg), ConfigError);
  }
  SUBCASE("unreadable dataset") {
    cfg.train_path = "/nonexistent/train.cdld";
    CHECK_THROWS_AS(pretrain(cfg), IoError);
  }
  SUBCASE("negative weights") {
    cfg.weights.lambda_mi = -1.0;
    CHECK_THROWS_AS(pretrain(cfg), ConfigError);
  }
}
