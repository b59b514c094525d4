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
#include <string>
#include <vector>

#include "raga/nn/layers.hpp"

namespace raga::nn {

struct ModelConfig {
  Index input_frames = 0;
  Index input_bins = 56;
  int num_classes = 172;
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;

  /// Propagates shapes through the stack; throws DimensionError if adjacent
  /// layers do not compose or the output is not a softmax over num_classes.
  std::vector<Shape> layer_shapes() const;
};

struct ArchitectureOptions {
  Index conv_filters = 64;
  Index kernel = 3;
  Index pool = 2;
  Index lstm_units = 512;
  std::vector<Index> dense_units{512, 256};
  double dropout = 0.5;
};

/// Conv1D -> MaxPool1D -> BatchNorm1D -> ReLU -> LSTM -> Flatten ->
/// [Dense -> ReLU -> Dropout]* -> Dense(num_classes) -> Softmax.
ModelConfig make_model_config(Index frames, Index bins, int num_classes, const ArchitectureOptions& arch,
                              std::uint64_t seed);

/// Conv 64/k3, LSTM 512, Dense 512/256, dropout 0.5.
ModelConfig reference_model_config(Index frames, Index bins = 56, int num_classes = 172, std::uint64_t seed = 0);

struct LayerCount {
  std::string kind;
  Shape output;
  Index trainable = 0;
  Index non_trainable = 0;
};

struct ParameterCount {
  std::vector<LayerCount> layers;
  Index trainable = 0;
  Index non_trainable = 0;

  std::string table() const;
};

/// Closed-form parameter accounting from the config alone.
ParameterCount count_parameters(const ModelConfig& cfg);

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return config_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// [batch x frames x bins] -> class probabilities [batch x num_classes].
  /// Training mode samples dropout masks, uses batch statistics in batch
  /// norm and caches activations for backward. Inference mode is const in
  /// effect and leaves no cache behind.
  Tensor forward(const Tensor& input, bool training);
  Tensor infer(const Tensor& input) const;

  /// Backpropagates a gradient with respect to the pre-softmax logits (the
  /// fused softmax + cross-entropy form) and fills every parameter gradient.
  void backward(const Tensor& grad_logits);

  /// Same, starting from a gradient with respect to the output probabilities.
  void backward_from_probabilities(const Tensor& grad_probs);

  /// Blocks in declaration order, including non-trainable statistics.
  std::vector<Parameter*> parameters();
  std::vector<Parameter*> trainable_parameters();
  std::vector<const Parameter*> parameters() const;

  /// Rounds every parameter to float32 precision (checkpoint storage).
  void round_to_storage_precision();

  ParameterCount count_parameters() const { return nn::count_parameters(config_); }

  Rng& rng() { return rng_; }

 private:
  void check_input(const Tensor& input) const;
  void backward_through(std::size_t first_layer, Tensor grad);

  ModelConfig config_;
  std::vector<Layer> layers_;
  Rng rng_;
  bool has_cache_ = false;
};

struct LossResult {
  double loss = 0.0;
  /// d loss / d logits = (p - y) / batch.
  Tensor grad_logits;
};

inline constexpr double kCrossEntropyEpsilon = 1e-12;

/// Mean categorical cross-entropy -mean(ln(p_true + eps)) for integer labels.
LossResult cross_entropy(const Tensor& probs, const std::vector<int>& labels);

/// Same for one-hot label rows.
LossResult cross_entropy(const Tensor& probs, const Tensor& one_hot);

/// Index of the largest entry per row (lowest index on ties).
std::vector<int> argmax_rows(const Tensor& probs);

}  // namespace raga::nn
