/*
 * Copyright 2026 The Raga Recognition Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "raga/nn/model.hpp"
#include "raga/nn/optim.hpp"

namespace raga::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct LoadedModel {
  Model model;
  nlohmann::json metadata;
  std::optional<AdamConfig> adam_config;
  std::optional<AdamState> adam_state;
};

/// Little-endian: "RGMD", version u32, length-prefixed JSON config block
/// ({"model": ..., "metadata": ...}), parameter block count u32, then per
/// block rows u32, cols u32 and rows * cols float32 in declaration order,
/// then an Adam flag u32 and, when set, its hyperparameters (f64), step
/// (u64) and first/second moments as float32 blocks.
std::vector<std::uint8_t> save_model(const Model& model, const Adam* optimizer = nullptr,
                                     const nlohmann::json& metadata = nlohmann::json::object());
LoadedModel load_model(std::span<const std::uint8_t> bytes);

void save_model_file(const std::string& path, const Model& model, const Adam* optimizer = nullptr,
                     const nlohmann::json& metadata = nlohmann::json::object());
LoadedModel load_model_file(const std::string& path);

}  // namespace raga::nn
