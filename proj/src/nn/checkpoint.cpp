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

#include "raga/nn/checkpoint.hpp"

#include "../bytes.hpp"
#include "raga/errors.hpp"

namespace raga::nn {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void put_block(bytes::Writer& w, const Matrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.size(); ++i) w.f32(static_cast<float>(m.data()[i]));
}

Matrix get_block(bytes::Reader& r, Index rows, Index cols, const std::string& what) {
  const auto got_rows = r.u32();
  const auto got_cols = r.u32();
  if (got_rows != rows || got_cols != cols) {
    throw FormatError("checkpoint block for " + what + " is " + std::to_string(got_rows) + "x" +
                      std::to_string(got_cols) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  r.need(static_cast<std::size_t>(m.size()) * 4);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
  return m;
}

}  // namespace

json to_json(const LayerSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Conv1DSpec& s) -> json {
            return {{"type", "Conv1D"}, {"in_channels", s.in_channels}, {"out_channels", s.out_channels},
                    {"kernel", s.kernel}};
          },
          [](const MaxPool1DSpec& s) -> json { return {{"type", "MaxPool1D"}, {"pool", s.pool}}; },
          [](const BatchNorm1DSpec& s) -> json {
            return {{"type", "BatchNorm1D"}, {"channels", s.channels}, {"momentum", s.momentum},
                    {"epsilon", s.epsilon}};
          },
          [](const ReLUSpec&) -> json { return {{"type", "ReLU"}}; },
          [](const LSTMSpec& s) -> json {
            return {{"type", "LSTM"}, {"input_size", s.input_size}, {"hidden", s.hidden}};
          },
          [](const FlattenSpec&) -> json { return {{"type", "Flatten"}}; },
          [](const DenseSpec& s) -> json { return {{"type", "Dense"}, {"in", s.in}, {"out", s.out}}; },
          [](const DropoutSpec& s) -> json { return {{"type", "Dropout"}, {"rate", s.rate}}; },
          [](const SoftmaxSpec&) -> json { return {{"type", "Softmax"}}; },
      },
      spec);
}

LayerSpec layer_spec_from_json(const json& j) {
  try {
    const std::string type = j.at("type");
    if (type == "Conv1D") return Conv1DSpec{j.at("in_channels"), j.at("out_channels"), j.at("kernel")};
    if (type == "MaxPool1D") return MaxPool1DSpec{j.at("pool")};
    if (type == "BatchNorm1D") return BatchNorm1DSpec{j.at("channels"), j.at("momentum"), j.at("epsilon")};
    if (type == "ReLU") return ReLUSpec{};
    if (type == "LSTM") return LSTMSpec{j.at("input_size"), j.at("hidden")};
    if (type == "Flatten") return FlattenSpec{};
    if (type == "Dense") return DenseSpec{j.at("in"), j.at("out")};
    if (type == "Dropout") return DropoutSpec{j.at("rate")};
    if (type == "Softmax") return SoftmaxSpec{};
    throw FormatError("unknown layer type '" + type + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad layer spec: ") + e.what());
  }
}

json to_json(const ModelConfig& cfg) {
  json layers = json::array();
  for (const auto& l : cfg.layers) layers.push_back(to_json(l));
  return {{"input_frames", cfg.input_frames},
          {"input_bins", cfg.input_bins},
          {"num_classes", cfg.num_classes},
          {"seed", cfg.seed},
          {"layers", layers}};
}

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig cfg;
    cfg.input_frames = j.at("input_frames");
    cfg.input_bins = j.at("input_bins");
    cfg.num_classes = j.at("num_classes");
    cfg.seed = j.at("seed");
    for (const auto& l : j.at("layers")) cfg.layers.push_back(layer_spec_from_json(l));
    return cfg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model config: ") + e.what());
  }
}

std::vector<std::uint8_t> save_model(const Model& model, const Adam* optimizer, const json& metadata) {
  bytes::Writer w;
  w.tag("RGMD");
  w.u32(kCheckpointVersion);
  w.str(json{{"model", to_json(model.config())}, {"metadata", metadata}}.dump());

  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) put_block(w, p->value);

  w.u32(optimizer ? 1 : 0);
  if (optimizer) {
    const auto& c = optimizer->config();
    w.f64(c.learning_rate);
    w.f64(c.beta1);
    w.f64(c.beta2);
    w.f64(c.epsilon);
    const auto& s = optimizer->state();
    w.u64(static_cast<std::uint64_t>(s.step));
    w.u32(static_cast<std::uint32_t>(s.first_moment.size()));
    for (std::size_t i = 0; i < s.first_moment.size(); ++i) {
      put_block(w, s.first_moment[i]);
      put_block(w, s.second_moment[i]);
    }
  }
  return w.take();
}

LoadedModel load_model(std::span<const std::uint8_t> data) {
  bytes::Reader r(data);
  if (!r.tag("RGMD")) throw FormatError("bad checkpoint magic");
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(v) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  json header;
  try {
    header = json::parse(r.str());
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint config block: ") + e.what());
  }
  if (!header.contains("model")) throw FormatError("checkpoint config block has no model");
  LoadedModel out{Model(model_config_from_json(header["model"])), header.value("metadata", json::object()),
                  std::nullopt, std::nullopt};

  auto params = out.model.parameters();
  if (r.u32() != params.size()) throw FormatError("checkpoint parameter block count does not match config");
  for (Parameter* p : params) p->value = get_block(r, p->value.rows(), p->value.cols(), p->name);

  if (r.u32() == 1) {
    AdamConfig c;
    c.learning_rate = r.f64();
    c.beta1 = r.f64();
    c.beta2 = r.f64();
    c.epsilon = r.f64();
    AdamState s;
    s.step = static_cast<std::int64_t>(r.u64());
    const auto trainable = out.model.trainable_parameters();
    if (r.u32() != trainable.size()) throw FormatError("optimizer state does not match trainable parameters");
    for (const Parameter* p : trainable) {
      s.first_moment.push_back(get_block(r, p->value.rows(), p->value.cols(), p->name + " m"));
      s.second_moment.push_back(get_block(r, p->value.rows(), p->value.cols(), p->name + " v"));
    }
    out.adam_config = c;
    out.adam_state = std::move(s);
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint");
  return out;
}

void save_model_file(const std::string& path, const Model& model, const Adam* optimizer, const json& metadata) {
  bytes::write_file(path, save_model(model, optimizer, metadata));
}

LoadedModel load_model_file(const std::string& path) {
  try {
    return load_model(bytes::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace raga::nn
