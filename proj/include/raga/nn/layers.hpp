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

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "raga/nn/tensor.hpp"
#include "raga/rng.hpp"

namespace raga::nn {

/// A named parameter block with its gradient. Non-trainable blocks (batch
/// norm running statistics) are checkpointed but never optimized.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
};

// Layer hyperparameters. Shapes below exclude the leading batch dimension.

/// [T x in] -> [T - kernel + 1 x out]; stride 1, no padding.
struct Conv1DSpec {
  Index in_channels = 1;
  Index out_channels = 64;
  Index kernel = 3;
};

/// [T x C] -> [floor(T / pool) x C]; stride equals pool.
struct MaxPool1DSpec {
  Index pool = 2;
};

/// Normalizes the last dimension over all other positions in the batch.
struct BatchNorm1DSpec {
  Index channels = 64;
  double momentum = 0.99;
  double epsilon = 1e-3;
};

struct ReLUSpec {};

/// [T x input_size] -> [T x hidden]; gate order (i, f, g, o); returns the
/// full hidden sequence.
struct LSTMSpec {
  Index input_size = 64;
  Index hidden = 512;
};

struct FlattenSpec {};

struct DenseSpec {
  Index in = 512;
  Index out = 256;
};

/// Inverted dropout: kept activations are scaled by 1 / (1 - rate).
struct DropoutSpec {
  double rate = 0.5;
};

struct SoftmaxSpec {};

using LayerSpec = std::variant<Conv1DSpec, MaxPool1DSpec, BatchNorm1DSpec, ReLUSpec, LSTMSpec, FlattenSpec,
                               DenseSpec, DropoutSpec, SoftmaxSpec>;

std::string kind_name(const LayerSpec& spec);

/// Per-item output shape; throws DimensionError when `in` does not fit.
Shape output_shape(const LayerSpec& spec, const Shape& in);

// Every layer offers the same surface:
//   infer(x)          inference-mode forward, no side effects
//   forward(x, rng)   training-mode forward; caches what backward needs
//   backward(dy)      returns dx and writes parameter gradients
//   parameters()      parameter blocks in declaration order

class Conv1D {
 public:
  Conv1D(const Conv1DSpec& spec, Rng& rng);
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }

  Conv1DSpec spec;
  Parameter weight;  // [out x in * kernel], column = channel * kernel + tap
  Parameter bias;    // [out x 1]

 private:
  std::optional<Tensor> input_;
};

class MaxPool1D {
 public:
  explicit MaxPool1D(const MaxPool1DSpec& spec) : spec(spec) {}
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {}; }

  MaxPool1DSpec spec;

 private:
  Tensor pool(const Tensor& x, std::vector<Index>* argmax) const;
  Shape input_shape_;
  std::vector<Index> argmax_;
  bool cached_ = false;
};

class BatchNorm1D {
 public:
  explicit BatchNorm1D(const BatchNorm1DSpec& spec);
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {&gamma, &beta, &running_mean, &running_var}; }

  BatchNorm1DSpec spec;
  Parameter gamma;         // [1 x C]
  Parameter beta;          // [1 x C]
  Parameter running_mean;  // [1 x C], non-trainable
  Parameter running_var;   // [1 x C], non-trainable

 private:
  std::optional<Tensor> normalized_;
  Eigen::RowVectorXd inv_std_;
};

class ReLU {
 public:
  explicit ReLU(const ReLUSpec& = {}) {}
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {}; }

 private:
  std::optional<Tensor> input_;
};

class LSTM {
 public:
  LSTM(const LSTMSpec& spec, Rng& rng);
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {&input_weight, &recurrent_weight, &bias}; }

  LSTMSpec spec;
  Parameter input_weight;      // W [4h x in]
  Parameter recurrent_weight;  // U [4h x h]
  Parameter bias;              // [4h x 1]

 private:
  struct Cache {
    Tensor input;             // [B, T, in]
    std::vector<Matrix> gates;  // per step [B x 4h], activated (i, f, g, o)
    std::vector<Matrix> cell;   // per step [B x h]
    std::vector<Matrix> hidden;  // per step [B x h]
  };
  Tensor run(const Tensor& x, Cache* cache) const;
  std::optional<Cache> cache_;
};

class Flatten {
 public:
  explicit Flatten(const FlattenSpec& = {}) {}
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {}; }

 private:
  Shape input_shape_;
  bool cached_ = false;
};

class Dense {
 public:
  Dense(const DenseSpec& spec, Rng& rng);
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }

  DenseSpec spec;
  Parameter weight;  // [out x in]
  Parameter bias;    // [out x 1]

 private:
  std::optional<Tensor> input_;
};

class Dropout {
 public:
  explicit Dropout(const DropoutSpec& spec);
  Tensor infer(const Tensor& x) const { return x; }
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {}; }

  /// While frozen, forward reuses the last sampled mask (for gradient checks).
  void freeze_mask(bool frozen) { frozen_ = frozen; }
  const std::optional<Tensor>& mask() const { return mask_; }

  DropoutSpec spec;

 private:
  std::optional<Tensor> mask_;
  bool frozen_ = false;
};

/// Row-wise softmax over the last dimension, shifted by the row max.
class Softmax {
 public:
  explicit Softmax(const SoftmaxSpec& = {}) {}
  Tensor infer(const Tensor& x) const;
  Tensor forward(const Tensor& x, Rng& rng);
  Tensor backward(const Tensor& dy);
  std::vector<Parameter*> parameters() { return {}; }

 private:
  std::optional<Tensor> output_;
};

using Layer = std::variant<Conv1D, MaxPool1D, BatchNorm1D, ReLU, LSTM, Flatten, Dense, Dropout, Softmax>;

/// Builds a layer with seeded Glorot-uniform weights, zero biases and an
/// LSTM forget-gate bias of 1.
Layer make_layer(const LayerSpec& spec, Rng& rng);
LayerSpec spec_of(const Layer& layer);

Tensor softmax_rows(const Tensor& logits);

}  // namespace raga::nn
