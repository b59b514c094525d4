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

#include "raga/nn/model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "raga/errors.hpp"

namespace raga::nn {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

LayerCount count_layer(const LayerSpec& spec, const Shape& out) {
  LayerCount c{kind_name(spec), out, 0, 0};
  std::visit(Overloaded{
                 [&](const Conv1DSpec& s) { c.trainable = (s.kernel * s.in_channels + 1) * s.out_channels; },
                 [&](const BatchNorm1DSpec& s) {
                   c.trainable = 2 * s.channels;
                   c.non_trainable = 2 * s.channels;
                 },
                 [&](const LSTMSpec& s) { c.trainable = 4 * (s.hidden * (s.input_size + s.hidden) + s.hidden); },
                 [&](const DenseSpec& s) { c.trainable = (s.in + 1) * s.out; },
                 [](const auto&) {},
             },
             spec);
  return c;
}

}  // namespace

std::vector<Shape> ModelConfig::layer_shapes() const {
  if (input_frames <= 0 || input_bins <= 0) throw DimensionError("model input shape must be positive");
  if (num_classes <= 0) throw DimensionError("model needs at least one class");
  if (layers.empty()) throw DimensionError("model has no layers");
  std::vector<Shape> shapes;
  Shape s{input_frames, input_bins};
  for (const auto& layer : layers) {
    s = output_shape(layer, s);
    shapes.push_back(s);
  }
  if (!std::holds_alternative<SoftmaxSpec>(layers.back())) throw DimensionError("final layer must be Softmax");
  if (s != Shape{num_classes}) {
    throw DimensionError("model output " + to_string(s) + " does not match " + std::to_string(num_classes) +
                         " classes");
  }
  return shapes;
}

ModelConfig make_model_config(Index frames, Index bins, int num_classes, const ArchitectureOptions& a,
                              std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_frames = frames;
  cfg.input_bins = bins;
  cfg.num_classes = num_classes;
  cfg.seed = seed;
  cfg.layers = {
      Conv1DSpec{bins, a.conv_filters, a.kernel},
      MaxPool1DSpec{a.pool},
      BatchNorm1DSpec{a.conv_filters},
      ReLUSpec{},
      LSTMSpec{a.conv_filters, a.lstm_units},
      FlattenSpec{},
  };
  const Index pooled = (frames - a.kernel + 1) / a.pool;
  if (pooled < 1) {
    throw DimensionError(std::to_string(frames) + " frames leave nothing after a kernel of " +
                         std::to_string(a.kernel) + " and pooling by " + std::to_string(a.pool));
  }
  Index width = pooled * a.lstm_units;
  for (Index units : a.dense_units) {
    cfg.layers.push_back(DenseSpec{width, units});
    cfg.layers.push_back(ReLUSpec{});
    cfg.layers.push_back(DropoutSpec{a.dropout});
    width = units;
  }
  cfg.layers.push_back(DenseSpec{width, num_classes});
  cfg.layers.push_back(SoftmaxSpec{});
  return cfg;
}

ModelConfig reference_model_config(Index frames, Index bins, int num_classes, std::uint64_t seed) {
  return make_model_config(frames, bins, num_classes, ArchitectureOptions{}, seed);
}

ParameterCount count_parameters(const ModelConfig& cfg) {
  const auto shapes = cfg.layer_shapes();
  ParameterCount total;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    auto c = count_layer(cfg.layers[i], shapes[i]);
    total.trainable += c.trainable;
    total.non_trainable += c.non_trainable;
    total.layers.push_back(std::move(c));
  }
  return total;
}

std::string ParameterCount::table() const {
  std::ostringstream os;
  os << std::left << std::setw(4) << "#" << std::setw(14) << "layer" << std::setw(18) << "output" << std::right
     << std::setw(14) << "trainable" << std::setw(16) << "non-trainable" << "\n";
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    os << std::left << std::setw(4) << i << std::setw(14) << l.kind << std::setw(18) << to_string(l.output)
       << std::right << std::setw(14) << l.trainable << std::setw(16) << l.non_trainable << "\n";
  }
  os << std::left << std::setw(36) << "total" << std::right << std::setw(14) << trainable << std::setw(16)
     << non_trainable << "\n";
  return os.str();
}

Model::Model(ModelConfig cfg) : config_(std::move(cfg)), rng_(config_.seed) {
  config_.layer_shapes();
  layers_.reserve(config_.layers.size());
  for (const auto& spec : config_.layers) layers_.push_back(make_layer(spec, rng_));
  round_to_storage_precision();
}

void Model::check_input(const Tensor& input) const {
  if (input.rank() != 3 || input.dim(1) != config_.input_frames || input.dim(2) != config_.input_bins) {
    throw DimensionError("model expects [batch x " + std::to_string(config_.input_frames) + " x " +
                         std::to_string(config_.input_bins) + "], got " + to_string(input.shape()));
  }
}

Tensor Model::forward(const Tensor& input, bool training) {
  if (!training) {
    has_cache_ = false;
    return infer(input);
  }
  check_input(input);
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = std::visit([&](auto& layer) { return layer.forward(x, rng_); }, layers_[i]);
    if (!x.all_finite()) {
      has_cache_ = false;
      throw NumericError("non-finite activation after layer " + std::to_string(i) + " (" +
                         kind_name(config_.layers[i]) + ")");
    }
  }
  has_cache_ = true;
  return x;
}

Tensor Model::infer(const Tensor& input) const {
  check_input(input);
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = std::visit([&](const auto& layer) { return layer.infer(x); }, layers_[i]);
    if (!x.all_finite()) {
      throw NumericError("non-finite activation after layer " + std::to_string(i) + " (" +
                         kind_name(config_.layers[i]) + ")");
    }
  }
  return x;
}

void Model::backward_through(std::size_t end, Tensor grad) {
  if (!has_cache_) throw StateError("backward called without a training forward pass");
  for (std::size_t i = end; i-- > 0;) {
    grad = std::visit([&](auto& layer) { return layer.backward(grad); }, layers_[i]);
    if (!grad.all_finite()) {
      throw NumericError("non-finite gradient at layer " + std::to_string(i) + " (" +
                         kind_name(config_.layers[i]) + ")");
    }
  }
}

void Model::backward(const Tensor& grad_logits) { backward_through(layers_.size() - 1, grad_logits); }

void Model::backward_from_probabilities(const Tensor& grad_probs) { backward_through(layers_.size(), grad_probs); }

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    auto p = std::visit([](auto& l) { return l.parameters(); }, layer);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> Model::trainable_parameters() {
  std::vector<Parameter*> out;
  for (Parameter* p : parameters()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

void Model::round_to_storage_precision() {
  for (Parameter* p : parameters()) p->value = p->value.cast<float>().cast<double>();
}

LossResult cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2) throw DimensionError("cross entropy expects [batch x classes] probabilities");
  const Index batch = probs.dim(0), classes = probs.dim(1);
  if (static_cast<Index>(labels.size()) != batch) throw DimensionError("label count does not match batch size");
  if (batch == 0) throw DimensionError("cross entropy of an empty batch");
  LossResult r{0.0, probs};
  auto g = r.grad_logits.matrix();
  for (Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= classes) throw DimensionError("label " + std::to_string(y) + " out of range");
    r.loss -= std::log(probs.matrix()(b, y) + kCrossEntropyEpsilon);
    g(b, y) -= 1.0;
  }
  r.loss /= static_cast<double>(batch);
  r.grad_logits.flat() /= static_cast<double>(batch);
  return r;
}

LossResult cross_entropy(const Tensor& probs, const Tensor& one_hot) {
  if (one_hot.shape() != probs.shape()) throw DimensionError("one-hot labels do not match probabilities");
  std::vector<int> labels;
  for (Index b = 0; b < one_hot.dim(0); ++b) {
    Index y = 0;
    one_hot.matrix().row(b).maxCoeff(&y);
    labels.push_back(static_cast<int>(y));
  }
  return cross_entropy(probs, labels);
}

std::vector<int> argmax_rows(const Tensor& probs) {
  std::vector<int> out;
  const auto m = probs.rows();
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

}  // namespace raga::nn
