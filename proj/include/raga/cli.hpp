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

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "raga/featex.hpp"
#include "raga/nn/model.hpp"
#include "raga/synth.hpp"
#include "raga/train.hpp"

namespace raga {

/// A complete set of defaults for every subcommand.
struct Preset {
  std::string name;
  FeatureConfig features;
  nn::ArchitectureOptions arch;
  TrainConfig train;
  SynthConfig synth;
  int per_class = 40;
  std::vector<double> shruti_set;
};

/// Small model on 5 s synthetic clips; trains in well under a minute.
Preset desk_preset();
/// 30 s segments, Conv 64/k3, LSTM 512, Dense 512/256, batch 256,
/// 300 epochs, patience 100.
Preset reference_preset();
/// "desk" or "reference"; throws ConfigError otherwise.
Preset preset_by_name(const std::string& name);

nlohmann::json to_json(const nn::ArchitectureOptions& arch);
nn::ArchitectureOptions architecture_from_json(const nlohmann::json& j, nn::ArchitectureOptions base);

/// Config files are JSON objects with optional "features", "model",
/// "train" and "synth" sections; any field left out keeps the preset value.
nlohmann::json to_json(const Preset& p);
Preset apply_config(Preset base, const nlohmann::json& j);

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitData = 3, kExitNumeric = 4 };

/// Runs one CLI invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace raga
