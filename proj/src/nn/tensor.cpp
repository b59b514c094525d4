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

#include "raga/nn/tensor.hpp"

#include <numeric>

#include "raga/errors.hpp"

namespace raga::nn {

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Index num_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (Index d : shape_) {
    if (d < 0) throw DimensionError("negative tensor dimension in " + to_string(shape_));
  }
  data_ = Vector::Constant(num_elements(shape_), fill);
}

Tensor::Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != num_elements(shape_)) {
    throw DimensionError("tensor data of " + std::to_string(data_.size()) + " values does not fit " +
                         to_string(shape_));
  }
}

MatrixMap Tensor::matrix() {
  const Index r = shape_.empty() ? 1 : shape_[0];
  return MatrixMap(data_.data(), r, r == 0 ? 0 : data_.size() / r);
}

ConstMatrixMap Tensor::matrix() const {
  const Index r = shape_.empty() ? 1 : shape_[0];
  return ConstMatrixMap(data_.data(), r, r == 0 ? 0 : data_.size() / r);
}

MatrixMap Tensor::item(Index b) {
  if (rank() != 3) throw DimensionError("item() needs a rank-3 tensor, got " + to_string(shape_));
  return MatrixMap(data_.data() + b * shape_[1] * shape_[2], shape_[1], shape_[2]);
}

ConstMatrixMap Tensor::item(Index b) const {
  if (rank() != 3) throw DimensionError("item() needs a rank-3 tensor, got " + to_string(shape_));
  return ConstMatrixMap(data_.data() + b * shape_[1] * shape_[2], shape_[1], shape_[2]);
}

MatrixMap Tensor::rows() {
  const Index c = shape_.empty() ? 1 : shape_.back();
  return MatrixMap(data_.data(), c == 0 ? 0 : data_.size() / c, c);
}

ConstMatrixMap Tensor::rows() const {
  const Index c = shape_.empty() ? 1 : shape_.back();
  return ConstMatrixMap(data_.data(), c == 0 ? 0 : data_.size() / c, c);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (num_elements(shape) != size()) {
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

}  // namespace raga::nn
