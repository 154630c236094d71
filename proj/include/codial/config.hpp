// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#pragma once

#include <string>

#include "json.hpp"

#include "codial/losses.hpp"
#include "codial/models.hpp"
#include "codial/optimizer.hpp"
#include "codial/training.hpp"
#include "codial/transforms.hpp"

namespace codial {

// Insertion-ordered JSON so serialized configs print in declaration order.
using Json = nlohmann::ordered_json;

Json config_to_json(const AuxConfig& v);
Json config_to_json(const ConvStage& v);
Json config_to_json(const EncoderConfig& v);
Json config_to_json(const ModelConfig& v);
Json config_to_json(const LossWeights& v);
Json config_to_json(const BetaSchedule& v);
Json config_to_json(const OptimizerConfig& v);
Json config_to_json(const TrainConfig& v);

// Strict: every present key must be known (typos rejected); absent keys keep
// their defaults. Throws ConfigError with the offending key path.
void config_from_json(const Json& j, AuxConfig& v);
void config_from_json(const Json& j, ConvStage& v);
void config_from_json(const Json& j, EncoderConfig& v);
void config_from_json(const Json& j, ModelConfig& v);
void config_from_json(const Json& j, LossWeights& v);
void config_from_json(const Json& j, BetaSchedule& v);
void config_from_json(const Json& j, OptimizerConfig& v);
void config_from_json(const Json& j, TrainConfig& v);

// Reads and strictly parses a TrainConfig JSON file.
TrainConfig load_train_config(const std::string& path);

}  // namespace codial
