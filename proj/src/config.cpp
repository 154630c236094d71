// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#include "codial/config.hpp"

#include <fstream>
#include <set>

#include "codial/errors.hpp"

namespace codial {
namespace {

// Tracks which keys a struct consumed so leftovers can be rejected.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string context)
      : j_(j), context_(std::move(context)) {
    if (!j.is_object())
      throw ConfigError(context_ + ": expected a JSON object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& at(const char* key) { return j_.at(key); }

  template <typename V>
  void get(const char* key, V& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const Json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  void get_nested(const char* key, auto& out) {
    if (!has(key)) return;
    config_from_json(j_.at(key), out);
  }

  void finish() {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError(context_ + ": unknown key '" + item.key() + "'");
  }

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

std::string method_name(OptMethod m) {
  return m == OptMethod::kAdam ? "adam" : "sgd_momentum";
}

OptMethod method_from_name(const std::string& s) {
  if (s == "adam") return OptMethod::kAdam;
  if (s == "sgd_momentum") return OptMethod::kSgdMomentum;
  throw ConfigError("optimizer.method: unknown method '" + s + "'");
}

}  // namespace

Json config_to_json(const AuxConfig& v) {
  Json j;
  j["out_size"] = v.out_size;
  j["flip_prob"] = v.flip_prob;
  j["boundary_px"] = v.boundary_px;
  j["enable_crop"] = v.enable_crop;
  j["crop_area_lo"] = v.crop_area_lo;
  j["crop_area_hi"] = v.crop_area_hi;
  j["crop_aspect_lo"] = v.crop_aspect_lo;
  j["crop_aspect_hi"] = v.crop_aspect_hi;
  j["enable_jitter"] = v.enable_jitter;
  j["jitter_lo"] = v.jitter_lo;
  j["jitter_hi"] = v.jitter_hi;
  j["enable_blur"] = v.enable_blur;
  j["blur_kernel_frac"] = v.blur_kernel_frac;
  j["blur_sigma_lo"] = v.blur_sigma_lo;
  j["blur_sigma_hi"] = v.blur_sigma_hi;
  j["warp_max_frac"] = v.warp_max_frac;
  j["warp_grid"] = v.warp_grid;
  return j;
}

void config_from_json(const Json& j, AuxConfig& v) {
  StrictObject o(j, "aux");
  o.get("out_size", v.out_size);
  o.get("flip_prob", v.flip_prob);
  o.get("boundary_px", v.boundary_px);
  o.get("enable_crop", v.enable_crop);
  o.get("crop_area_lo", v.crop_area_lo);
  o.get("crop_area_hi", v.crop_area_hi);
  o.get("crop_aspect_lo", v.crop_aspect_lo);
  o.get("crop_aspect_hi", v.crop_aspect_hi);
  o.get("enable_jitter", v.enable_jitter);
  o.get("jitter_lo", v.jitter_lo);
  o.get("jitter_hi", v.jitter_hi);
  o.get("enable_blur", v.enable_blur);
  o.get("blur_kernel_frac", v.blur_kernel_frac);
  o.get("blur_sigma_lo", v.blur_sigma_lo);
  o.get("blur_sigma_hi", v.blur_sigma_hi);
  o.get("warp_max_frac", v.warp_max_frac);
  o.get("warp_grid", v.warp_grid);
  o.finish();
}

Json config_to_json(const ConvStage& v) {
  Json j;
  j["channels"] = v.channels;
  j["kernel"] = v.kernel;
  j["stride"] = v.stride;
  return j;
}

void config_from_json(const Json& j, ConvStage& v) {
  StrictObject o(j, "stage");
  o.get("channels", v.channels);
  o.get("kernel", v.kernel);
  o.get("stride", v.stride);
  o.finish();
}

Json config_to_json(const EncoderConfig& v) {
  Json j;
  j["input_size"] = v.input_size;
  j["in_channels"] = v.in_channels;
  Json stages = Json::array();
  for (const ConvStage& s : v.stages) stages.push_back(config_to_json(s));
  j["stages"] = stages;
  j["feature_dim"] = v.feature_dim;
  return j;
}

void config_from_json(const Json& j, EncoderConfig& v) {
  StrictObject o(j, "encoder");
  o.get("input_size", v.input_size);
  o.get("in_channels", v.in_channels);
  if (o.has("stages")) {
    const Json& arr = o.at("stages");
    if (!arr.is_array())
      throw ConfigError("encoder.stages: expected an array");
    v.stages.clear();
    for (const Json& e : arr) {
      ConvStage s;
      config_from_json(e, s);
      v.stages.push_back(s);
    }
  }
  o.get("feature_dim", v.feature_dim);
  o.finish();
}

Json config_to_json(const ModelConfig& v) {
  Json j;
  j["encoder"] = config_to_json(v.encoder);
  j["num_classes"] = v.num_classes;
  j["repr_dim"] = v.repr_dim;
  j["critic_hidden"] = v.critic_hidden;
  return j;
}

void config_from_json(const Json& j, ModelConfig& v) {
  StrictObject o(j, "model");
  o.get_nested("encoder", v.encoder);
  o.get("num_classes", v.num_classes);
  o.get("repr_dim", v.repr_dim);
  o.get("critic_hidden", v.critic_hidden);
  o.finish();
}

Json config_to_json(const LossWeights& v) {
  Json j;
  j["lambda_cls"] = v.lambda_cls;
  j["lambda_mi"] = v.lambda_mi;
  return j;
}

void config_from_json(const Json& j, LossWeights& v) {
  StrictObject o(j, "weights");
  o.get("lambda_cls", v.lambda_cls);
  o.get("lambda_mi", v.lambda_mi);
  o.finish();
}

Json config_to_json(const BetaSchedule& v) {
  Json j;
  j["start_value"] = v.start_value;
  j["end_value"] = v.end_value;
  j["start_epoch"] = v.start_epoch;
  j["ramp_epochs"] = v.ramp_epochs;
  return j;
}

void config_from_json(const Json& j, BetaSchedule& v) {
  StrictObject o(j, "beta");
  o.get("start_value", v.start_value);
  o.get("end_value", v.end_value);
  o.get("start_epoch", v.start_epoch);
  o.get("ramp_epochs", v.ramp_epochs);
  o.finish();
}

Json config_to_json(const OptimizerConfig& v) {
  Json j;
  j["method"] = method_name(v.method);
  j["lr"] = v.lr;
  j["weight_decay"] = v.weight_decay;
  j["momentum"] = v.momentum;
  j["beta1"] = v.beta1;
  j["beta2"] = v.beta2;
  j["eps"] = v.eps;
  return j;
}

void config_from_json(const Json& j, OptimizerConfig& v) {
  StrictObject o(j, "optimizer");
  if (o.has("method")) {
    const Json& m = o.at("method");
    if (!m.is_string())
      throw ConfigError("optimizer.method: expected a string");
    v.method = method_from_name(m.get<std::string>());
  }
  o.get("lr", v.lr);
  o.get("weight_decay", v.weight_decay);
  o.get("momentum", v.momentum);
  o.get("beta1", v.beta1);
  o.get("beta2", v.beta2);
  o.get("eps", v.eps);
  o.finish();
}

Json config_to_json(const TrainConfig& v) {
  Json j;
  j["epochs"] = v.epochs;
  j["batch_size"] = v.batch_size;
  j["seed"] = v.seed;
  j["optimizer"] = config_to_json(v.optimizer);
  j["weights"] = config_to_json(v.weights);
  j["beta"] = config_to_json(v.beta);
  j["aux"] = config_to_json(v.aux);
  j["model"] = config_to_json(v.model);
  j["pair_subset_k"] = v.pair_subset_k;
  j["train_path"] = v.train_path;
  j["eval_path"] = v.eval_path;
  j["output_dir"] = v.output_dir;
  return j;
}

void config_from_json(const Json& j, TrainConfig& v) {
  StrictObject o(j, "config");
  o.get("epochs", v.epochs);
  o.get("batch_size", v.batch_size);
  o.get("seed", v.seed);
  o.get_nested("optimizer", v.optimizer);
  o.get_nested("weights", v.weights);
  o.get_nested("beta", v.beta);
  o.get_nested("aux", v.aux);
  o.get_nested("model", v.model);
  o.get("pair_subset_k", v.pair_subset_k);
  o.get("train_path", v.train_path);
  o.get("eval_path", v.eval_path);
  o.get("output_dir", v.output_dir);
  o.finish();
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  TrainConfig cfg;
  config_from_json(j, cfg);
  return cfg;
}

}  // namespace codial
