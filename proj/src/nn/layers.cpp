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

#include "raga/nn/layers.hpp"

#include <cmath>

#include "raga/errors.hpp"

namespace raga::nn {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using StridedMap = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

Parameter glorot(std::string name, Index rows, Index cols, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(rows, cols);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return Parameter{std::move(name), w, Matrix::Zero(rows, cols), true};
}

Parameter zeros(std::string name, Index rows, Index cols, bool trainable = true) {
  return Parameter{std::move(name), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols), trainable};
}

void expect_rank(const Tensor& x, Index rank, const char* layer) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(layer) + " expects a rank-" + std::to_string(rank) + " input, got " +
                         to_string(x.shape()));
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Row (b * out_t + t) holds the k-tap window starting at frame t of item b,
// column (channel * k + tap).
Matrix im2col(const Tensor& x, Index kernel) {
  const Index batch = x.dim(0), frames = x.dim(1), channels = x.dim(2);
  const Index out_t = frames - kernel + 1;
  Matrix cols(batch * out_t, channels * kernel);
  for (Index b = 0; b < batch; ++b) {
    const auto item = x.item(b);
    for (Index t = 0; t < out_t; ++t) {
      auto row = cols.row(b * out_t + t);
      for (Index c = 0; c < channels; ++c) {
        for (Index j = 0; j < kernel; ++j) row(c * kernel + j) = item(t + j, c);
      }
    }
  }
  return cols;
}

}  // namespace

std::string kind_name(const LayerSpec& spec) {
  return std::visit(Overloaded{
                        [](const Conv1DSpec&) { return "Conv1D"; },
                        [](const MaxPool1DSpec&) { return "MaxPool1D"; },
                        [](const BatchNorm1DSpec&) { return "BatchNorm1D"; },
                        [](const ReLUSpec&) { return "ReLU"; },
                        [](const LSTMSpec&) { return "LSTM"; },
                        [](const FlattenSpec&) { return "Flatten"; },
                        [](const DenseSpec&) { return "Dense"; },
                        [](const DropoutSpec&) { return "Dropout"; },
                        [](const SoftmaxSpec&) { return "Softmax"; },
                    },
                    spec);
}

Shape output_shape(const LayerSpec& spec, const Shape& in) {
  const std::string kind = kind_name(spec);
  auto fail = [&](const std::string& why) -> Shape {
    throw DimensionError(kind + " cannot take input " + to_string(in) + ": " + why);
  };
  return std::visit(
      Overloaded{
          [&](const Conv1DSpec& s) -> Shape {
            if (in.size() != 2) return fail("expects [frames x channels]");
            if (in[1] != s.in_channels) return fail("channel count mismatch");
            if (in[0] < s.kernel) return fail("fewer frames than kernel taps");
            return {in[0] - s.kernel + 1, s.out_channels};
          },
          [&](const MaxPool1DSpec& s) -> Shape {
            if (in.size() != 2) return fail("expects [frames x channels]");
            if (s.pool < 1 || in[0] < s.pool) return fail("fewer frames than pool size");
            return {in[0] / s.pool, in[1]};
          },
          [&](const BatchNorm1DSpec& s) -> Shape {
            if (in.empty() || in.back() != s.channels) return fail("channel count mismatch");
            return in;
          },
          [&](const ReLUSpec&) -> Shape { return in; },
          [&](const LSTMSpec& s) -> Shape {
            if (in.size() != 2) return fail("expects [frames x features]");
            if (in[1] != s.input_size) return fail("input size mismatch");
            return {in[0], s.hidden};
          },
          [&](const FlattenSpec&) -> Shape { return {num_elements(in)}; },
          [&](const DenseSpec& s) -> Shape {
            if (in.size() != 1 || in[0] != s.in) return fail("expects a vector of " + std::to_string(s.in));
            return {s.out};
          },
          [&](const DropoutSpec& s) -> Shape {
            if (!(s.rate >= 0.0 && s.rate < 1.0)) return fail("dropout rate must lie in [0, 1)");
            return in;
          },
          [&](const SoftmaxSpec&) -> Shape {
            if (in.size() != 1) return fail("expects a vector");
            return in;
          },
      },
      spec);
}

// ---------------------------------------------------------------- Conv1D

Conv1D::Conv1D(const Conv1DSpec& s, Rng& rng)
    : spec(s),
      weight(glorot("conv.weight", s.out_channels, s.in_channels * s.kernel,
                    static_cast<double>(s.in_channels * s.kernel), static_cast<double>(s.out_channels * s.kernel),
                    rng)),
      bias(zeros("conv.bias", s.out_channels, 1)) {}

Tensor Conv1D::infer(const Tensor& x) const {
  expect_rank(x, 3, "Conv1D");
  const Shape out = output_shape(spec, {x.dim(1), x.dim(2)});
  Tensor y({x.dim(0), out[0], out[1]});
  y.rows().noalias() = im2col(x, spec.kernel) * weight.value.transpose();
  y.rows().rowwise() += bias.value.col(0).transpose();
  return y;
}

Tensor Conv1D::forward(const Tensor& x, Rng&) {
  Tensor y = infer(x);
  input_ = x;
  return y;
}

Tensor Conv1D::backward(const Tensor& dy) {
  if (!input_) throw StateError("Conv1D backward without a training forward pass");
  const Tensor& x = *input_;
  const Matrix cols = im2col(x, spec.kernel);
  const auto g = dy.rows();
  weight.grad.noalias() = g.transpose() * cols;
  bias.grad = g.colwise().sum().transpose();
  const Matrix dcols = g * weight.value;

  Tensor dx(x.shape());
  const Index out_t = dy.dim(1);
  for (Index b = 0; b < x.dim(0); ++b) {
    auto item = dx.item(b);
    for (Index t = 0; t < out_t; ++t) {
      const auto row = dcols.row(b * out_t + t);
      for (Index c = 0; c < x.dim(2); ++c) {
        for (Index j = 0; j < spec.kernel; ++j) item(t + j, c) += row(c * spec.kernel + j);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- MaxPool1D

Tensor MaxPool1D::pool(const Tensor& x, std::vector<Index>* argmax) const {
  expect_rank(x, 3, "MaxPool1D");
  const Shape out = output_shape(spec, {x.dim(1), x.dim(2)});
  const Index batch = x.dim(0), frames = x.dim(1), channels = x.dim(2);
  Tensor y({batch, out[0], channels});
  if (argmax) argmax->assign(static_cast<std::size_t>(y.size()), 0);
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < out[0]; ++t) {
      for (Index c = 0; c < channels; ++c) {
        Index best = (b * frames + t * spec.pool) * channels + c;
        for (Index j = 1; j < spec.pool; ++j) {
          const Index idx = (b * frames + t * spec.pool + j) * channels + c;
          if (x[idx] > x[best]) best = idx;  // strict: first index wins ties
        }
        const Index o = (b * out[0] + t) * channels + c;
        y[o] = x[best];
        if (argmax) (*argmax)[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  return y;
}

Tensor MaxPool1D::infer(const Tensor& x) const { return pool(x, nullptr); }

Tensor MaxPool1D::forward(const Tensor& x, Rng&) {
  Tensor y = pool(x, &argmax_);
  input_shape_ = x.shape();
  cached_ = true;
  return y;
}

Tensor MaxPool1D::backward(const Tensor& dy) {
  if (!cached_) throw StateError("MaxPool1D backward without a training forward pass");
  Tensor dx(input_shape_);
  for (Index o = 0; o < dy.size(); ++o) dx[argmax_[static_cast<std::size_t>(o)]] += dy[o];
  return dx;
}

// ---------------------------------------------------------------- BatchNorm1D

BatchNorm1D::BatchNorm1D(const BatchNorm1DSpec& s)
    : spec(s),
      gamma{"bn.gamma", Matrix::Ones(1, s.channels), Matrix::Zero(1, s.channels), true},
      beta(zeros("bn.beta", 1, s.channels)),
      running_mean(zeros("bn.running_mean", 1, s.channels, false)),
      running_var{"bn.running_var", Matrix::Ones(1, s.channels), Matrix::Zero(1, s.channels), false} {}

Tensor BatchNorm1D::infer(const Tensor& x) const {
  if (x.rank() < 2 || x.shape().back() != spec.channels) {
    throw DimensionError("BatchNorm1D expects last dimension " + std::to_string(spec.channels) + ", got " +
                         to_string(x.shape()));
  }
  Tensor y(x.shape());
  const Eigen::RowVectorXd scale =
      gamma.value.row(0).array() / (running_var.value.row(0).array() + spec.epsilon).sqrt();
  const Eigen::RowVectorXd shift = beta.value.row(0).array() - running_mean.value.row(0).array() * scale.array();
  y.rows() = (x.rows().array().rowwise() * scale.array()).rowwise() + shift.array();
  return y;
}

Tensor BatchNorm1D::forward(const Tensor& x, Rng&) {
  if (x.rank() < 2 || x.shape().back() != spec.channels) {
    throw DimensionError("BatchNorm1D expects last dimension " + std::to_string(spec.channels) + ", got " +
                         to_string(x.shape()));
  }
  const auto rows = x.rows();
  const auto n = static_cast<double>(rows.rows());
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().sum() / n;
  inv_std_ = (var.array() + spec.epsilon).rsqrt();

  Tensor xhat(x.shape());
  xhat.rows() = centered.array().rowwise() * inv_std_.array();
  Tensor y(x.shape());
  y.rows() = (xhat.rows().array().rowwise() * gamma.value.row(0).array()).rowwise() + beta.value.row(0).array();

  running_mean.value = spec.momentum * running_mean.value + (1.0 - spec.momentum) * Matrix(mean);
  running_var.value = spec.momentum * running_var.value + (1.0 - spec.momentum) * Matrix(var);
  normalized_ = std::move(xhat);
  return y;
}

Tensor BatchNorm1D::backward(const Tensor& dy) {
  if (!normalized_) throw StateError("BatchNorm1D backward without a training forward pass");
  const auto g = dy.rows();
  const auto xhat = normalized_->rows();
  const auto n = static_cast<double>(g.rows());
  gamma.grad = (g.array() * xhat.array()).colwise().sum().matrix();
  beta.grad = g.colwise().sum();

  const Matrix dxhat = g.array().rowwise() * gamma.value.row(0).array();
  const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dx = (dxhat.array() * xhat.array()).colwise().sum();
  Tensor dx(dy.shape());
  dx.rows() = ((n * dxhat.array()).rowwise() - sum_d.array() - xhat.array().rowwise() * sum_dx.array()).rowwise() *
              (inv_std_.array() / n);
  return dx;
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::infer(const Tensor& x) const {
  Tensor y(x.shape());
  y.flat() = x.flat().cwiseMax(0.0);
  return y;
}

Tensor ReLU::forward(const Tensor& x, Rng&) {
  input_ = x;
  return infer(x);
}

Tensor ReLU::backward(const Tensor& dy) {
  if (!input_) throw StateError("ReLU backward without a training forward pass");
  Tensor dx(dy.shape());
  dx.flat() = (input_->flat().array() > 0.0).select(dy.flat(), 0.0);
  return dx;
}

// ---------------------------------------------------------------- LSTM

LSTM::LSTM(const LSTMSpec& s, Rng& rng)
    : spec(s),
      input_weight(glorot("lstm.W", 4 * s.hidden, s.input_size, static_cast<double>(s.input_size),
                          static_cast<double>(4 * s.hidden), rng)),
      recurrent_weight(glorot("lstm.U", 4 * s.hidden, s.hidden, static_cast<double>(s.hidden),
                              static_cast<double>(4 * s.hidden), rng)),
      bias(zeros("lstm.bias", 4 * s.hidden, 1)) {
  bias.value.block(s.hidden, 0, s.hidden, 1).setOnes();
}

Tensor LSTM::run(const Tensor& x, Cache* cache) const {
  expect_rank(x, 3, "LSTM");
  output_shape(spec, {x.dim(1), x.dim(2)});
  const Index batch = x.dim(0), steps = x.dim(1), h = spec.hidden, g4 = 4 * spec.hidden;

  const Matrix projected = x.rows() * input_weight.value.transpose();  // [(B*T) x 4h]
  Tensor y({batch, steps, h});
  Matrix hidden = Matrix::Zero(batch, h);
  Matrix cell = Matrix::Zero(batch, h);
  Matrix z(batch, g4);
  if (cache) {
    cache->input = x;
    cache->gates.assign(static_cast<std::size_t>(steps), Matrix());
    cache->cell.assign(static_cast<std::size_t>(steps), Matrix());
    cache->hidden.assign(static_cast<std::size_t>(steps), Matrix());
  }
  for (Index t = 0; t < steps; ++t) {
    z = ConstStridedMap(projected.data() + t * g4, batch, g4, Eigen::OuterStride<>(steps * g4));
    z.noalias() += hidden * recurrent_weight.value.transpose();
    z.rowwise() += bias.value.col(0).transpose();
    auto gi = z.leftCols(h);
    auto gf = z.middleCols(h, h);
    auto gg = z.middleCols(2 * h, h);
    auto go = z.rightCols(h);
    gi = gi.unaryExpr(&sigmoid);
    gf = gf.unaryExpr(&sigmoid);
    gg = gg.array().tanh().matrix();
    go = go.unaryExpr(&sigmoid);
    cell = gf.cwiseProduct(cell) + gi.cwiseProduct(gg);
    hidden = go.cwiseProduct(Matrix(cell.array().tanh()));
    StridedMap(y.data() + t * h, batch, h, Eigen::OuterStride<>(steps * h)) = hidden;
    if (cache) {
      cache->gates[static_cast<std::size_t>(t)] = z;
      cache->cell[static_cast<std::size_t>(t)] = cell;
      cache->hidden[static_cast<std::size_t>(t)] = hidden;
    }
  }
  return y;
}

Tensor LSTM::infer(const Tensor& x) const { return run(x, nullptr); }

Tensor LSTM::forward(const Tensor& x, Rng&) {
  Cache c;
  Tensor y = run(x, &c);
  cache_ = std::move(c);
  return y;
}

Tensor LSTM::backward(const Tensor& dy) {
  if (!cache_) throw StateError("LSTM backward without a training forward pass");
  const Cache& c = *cache_;
  const Index batch = c.input.dim(0), steps = c.input.dim(1), h = spec.hidden, g4 = 4 * spec.hidden;

  Matrix dz_all(batch * steps, g4);
  Matrix dh_next = Matrix::Zero(batch, h);
  Matrix dc_next = Matrix::Zero(batch, h);
  recurrent_weight.grad.setZero();
  Matrix dz(batch, g4);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const Matrix& gates = c.gates[ts];
    const auto gi = gates.leftCols(h).array();
    const auto gf = gates.middleCols(h, h).array();
    const auto gg = gates.middleCols(2 * h, h).array();
    const auto go = gates.rightCols(h).array();
    const Eigen::ArrayXXd tanh_c = c.cell[ts].array().tanh();

    const Eigen::ArrayXXd dh =
        ConstStridedMap(dy.data() + t * h, batch, h, Eigen::OuterStride<>(steps * h)).array() + dh_next.array();
    const Eigen::ArrayXXd dc = dh * go * (1.0 - tanh_c.square()) + dc_next.array();
    const Eigen::ArrayXXd prev_cell =
        t > 0 ? Eigen::ArrayXXd(c.cell[ts - 1].array()) : Eigen::ArrayXXd::Zero(batch, h);

    dz.leftCols(h) = (dc * gg * gi * (1.0 - gi)).matrix();
    dz.middleCols(h, h) = (dc * prev_cell * gf * (1.0 - gf)).matrix();
    dz.middleCols(2 * h, h) = (dc * gi * (1.0 - gg.square())).matrix();
    dz.rightCols(h) = (dh * tanh_c * go * (1.0 - go)).matrix();
    dc_next = (dc * gf).matrix();

    StridedMap(dz_all.data() + t * g4, batch, g4, Eigen::OuterStride<>(steps * g4)) = dz;
    if (t > 0) recurrent_weight.grad.noalias() += dz.transpose() * c.hidden[ts - 1];
    dh_next.noalias() = dz * recurrent_weight.value;
  }

  input_weight.grad.noalias() = dz_all.transpose() * c.input.rows();
  bias.grad = dz_all.colwise().sum().transpose();
  Tensor dx(c.input.shape());
  dx.rows().noalias() = dz_all * input_weight.value;
  return dx;
}

// ---------------------------------------------------------------- Flatten

Tensor Flatten::infer(const Tensor& x) const {
  if (x.rank() < 1) throw DimensionError("Flatten needs a batch dimension");
  return x.reshaped({x.dim(0), x.dim(0) == 0 ? 0 : x.size() / x.dim(0)});
}

Tensor Flatten::forward(const Tensor& x, Rng&) {
  input_shape_ = x.shape();
  cached_ = true;
  return infer(x);
}

Tensor Flatten::backward(const Tensor& dy) {
  if (!cached_) throw StateError("Flatten backward without a training forward pass");
  return dy.reshaped(input_shape_);
}

// ---------------------------------------------------------------- Dense

Dense::Dense(const DenseSpec& s, Rng& rng)
    : spec(s),
      weight(glorot("dense.weight", s.out, s.in, static_cast<double>(s.in), static_cast<double>(s.out), rng)),
      bias(zeros("dense.bias", s.out, 1)) {}

Tensor Dense::infer(const Tensor& x) const {
  expect_rank(x, 2, "Dense");
  output_shape(spec, {x.dim(1)});
  Tensor y({x.dim(0), spec.out});
  y.matrix().noalias() = x.matrix() * weight.value.transpose();
  y.matrix().rowwise() += bias.value.col(0).transpose();
  return y;
}

Tensor Dense::forward(const Tensor& x, Rng&) {
  Tensor y = infer(x);
  input_ = x;
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  if (!input_) throw StateError("Dense backward without a training forward pass");
  const auto g = dy.matrix();
  weight.grad.noalias() = g.transpose() * input_->matrix();
  bias.grad = g.colwise().sum().transpose();
  Tensor dx(input_->shape());
  dx.matrix().noalias() = g * weight.value;
  return dx;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(const DropoutSpec& s) : spec(s) {
  if (!(s.rate >= 0.0 && s.rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Rng& rng) {
  if (!(frozen_ && mask_ && mask_->shape() == x.shape())) {
    Tensor mask(x.shape());
    const double keep_scale = 1.0 / (1.0 - spec.rate);
    for (Index i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() >= spec.rate ? keep_scale : 0.0;
    mask_ = std::move(mask);
  }
  Tensor y(x.shape());
  y.flat() = x.flat().cwiseProduct(mask_->flat());
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  if (!mask_) throw StateError("Dropout backward without a training forward pass");
  Tensor dx(dy.shape());
  dx.flat() = dy.flat().cwiseProduct(mask_->flat());
  return dx;
}

// ---------------------------------------------------------------- Softmax

Tensor softmax_rows(const Tensor& logits) {
  Tensor p(logits.shape());
  const auto in = logits.rows();
  auto out = p.rows();
  for (Index r = 0; r < in.rows(); ++r) {
    const double m = in.row(r).maxCoeff();
    out.row(r) = (in.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return p;
}

Tensor Softmax::infer(const Tensor& x) const { return softmax_rows(x); }

Tensor Softmax::forward(const Tensor& x, Rng&) {
  output_ = softmax_rows(x);
  return *output_;
}

Tensor Softmax::backward(const Tensor& dy) {
  if (!output_) throw StateError("Softmax backward without a training forward pass");
  const auto p = output_->rows();
  const auto g = dy.rows();
  Tensor dx(dy.shape());
  const Eigen::VectorXd dot = (g.array() * p.array()).rowwise().sum();
  dx.rows() = p.array() * (g.array().colwise() - dot.array());
  return dx;
}

// ---------------------------------------------------------------- factory

Layer make_layer(const LayerSpec& spec, Rng& rng) {
  return std::visit(Overloaded{
                        [&](const Conv1DSpec& s) -> Layer { return Conv1D(s, rng); },
                        [&](const MaxPool1DSpec& s) -> Layer { return MaxPool1D(s); },
                        [&](const BatchNorm1DSpec& s) -> Layer { return BatchNorm1D(s); },
                        [&](const ReLUSpec& s) -> Layer { return ReLU(s); },
                        [&](const LSTMSpec& s) -> Layer { return LSTM(s, rng); },
                        [&](const FlattenSpec& s) -> Layer { return Flatten(s); },
                        [&](const DenseSpec& s) -> Layer { return Dense(s, rng); },
                        [&](const DropoutSpec& s) -> Layer { return Dropout(s); },
                        [&](const SoftmaxSpec& s) -> Layer { return Softmax(s); },
                    },
                    spec);
}

LayerSpec spec_of(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const Conv1D& l) -> LayerSpec { return l.spec; },
                        [](const MaxPool1D& l) -> LayerSpec { return l.spec; },
                        [](const BatchNorm1D& l) -> LayerSpec { return l.spec; },
                        [](const ReLU&) -> LayerSpec { return ReLUSpec{}; },
                        [](const LSTM& l) -> LayerSpec { return l.spec; },
                        [](const Flatten&) -> LayerSpec { return FlattenSpec{}; },
                        [](const Dense& l) -> LayerSpec { return l.spec; },
                        [](const Dropout& l) -> LayerSpec { return l.spec; },
                        [](const Softmax&) -> LayerSpec { return SoftmaxSpec{}; },
                    },
                    layer);
}

}  // namespace raga::nn
