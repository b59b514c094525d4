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

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "raga/audio_io.hpp"
#include "raga/featex.hpp"
#include "raga/nn/layers.hpp"
#include "raga/nn/model.hpp"
#include "raga/rng.hpp"

namespace raga::testing {

inline AudioClip sine(double freq_hz, double seconds, int rate = kPipelineSampleRate, double amplitude = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / rate));
  }
  return c;
}

/// Frequency of the strongest non-DC DFT bin, in Hz.
inline double dominant_frequency(const AudioClip& clip) {
  std::vector<double> x(clip.samples.begin(), clip.samples.end());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);
  std::size_t best = 1;
  for (std::size_t k = 1; k <= x.size() / 2; ++k) {
    if (std::norm(spec[k]) > std::norm(spec[best])) best = k;
  }
  return static_cast<double>(best) * clip.sample_rate / static_cast<double>(x.size());
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(static_cast<std::uint64_t>(std::hash<std::string>{}(tag)) ^
            static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)));
    path_ = std::filesystem::temp_directory_path() / ("raga_" + tag + "_" + std::to_string(rng.next() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const { return (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

inline nn::Tensor random_tensor(const nn::Shape& shape, Rng& rng, double scale = 1.0) {
  nn::Tensor t(shape);
  for (nn::Index i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

/// |a - n| / max(|a|, |n|, 1e-7).
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-7});
}

/// Largest relative error between backward() and central differences of
/// L = sum(forward(x) * R) for random R, over the input and every trainable
/// parameter. Forward runs in training mode.
template <typename L>
double layer_gradient_error(L& layer, const nn::Tensor& x, Rng& rng, double h = 1e-5) {
  Rng fwd_rng(7);
  const nn::Tensor y = layer.forward(x, fwd_rng);
  const nn::Tensor r = random_tensor(y.shape(), rng);
  auto loss = [&](const nn::Tensor& in) { return layer.forward(in, fwd_rng).flat().dot(r.flat()); };

  layer.forward(x, fwd_rng);
  const nn::Tensor dx = layer.backward(r);
  std::vector<nn::Matrix> grads;
  std::vector<nn::Parameter*> params;
  for (nn::Parameter* p : layer.parameters()) {
    if (!p->trainable) continue;
    params.push_back(p);
    grads.push_back(p->grad);
  }

  double worst = 0.0;
  nn::Tensor xp = x;
  for (nn::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double up = loss(xp);
    xp[i] = x[i] - h;
    const double down = loss(xp);
    xp[i] = x[i];
    worst = std::max(worst, relative_error(dx[i], (up - down) / (2.0 * h)));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Matrix& v = params[k]->value;
    for (nn::Index j = 0; j < v.size(); ++j) {
      const double saved = v.data()[j];
      v.data()[j] = saved + h;
      const double up = loss(x);
      v.data()[j] = saved - h;
      const double down = loss(x);
      v.data()[j] = saved;
      worst = std::max(worst, relative_error(grads[k].data()[j], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

/// Same check for softmax followed by cross-entropy, through the fused
/// (p - y) / B gradient.
inline double fused_softmax_ce_error(const nn::Tensor& logits, const std::vector<int>& labels, double h = 1e-5) {
  auto loss = [&](const nn::Tensor& z) { return nn::cross_entropy(nn::softmax_rows(z), labels).loss; };
  const nn::Tensor grad = nn::cross_entropy(nn::softmax_rows(logits), labels).grad_logits;
  double worst = 0.0;
  nn::Tensor zp = logits;
  for (nn::Index i = 0; i < logits.size(); ++i) {
    zp[i] = logits[i] + h;
    const double up = loss(zp);
    zp[i] = logits[i] - h;
    const double down = loss(zp);
    zp[i] = logits[i];
    worst = std::max(worst, relative_error(grad[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

/// Values at least `gap` apart with random signs and order, so that ReLU
/// kinks and max-pool ties stay out of reach of a finite-difference step.
inline nn::Tensor separated_tensor(const nn::Shape& shape, Rng& rng, double gap = 1e-2) {
  nn::Tensor t(shape);
  std::vector<double> values(static_cast<std::size_t>(t.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = (static_cast<double>(i) + 0.25 - static_cast<double>(values.size()) / 2.0) * gap;
  }
  rng.shuffle(std::span(values));
  for (nn::Index i = 0; i < t.size(); ++i) t[i] = values[static_cast<std::size_t>(i)];
  return t;
}

/// Per-layer gradient checks over random shapes; returns the worst error per
/// layer kind. Shared by unit and acceptance tests.
struct GradientSuiteResult {
  std::string layer;
  int shapes = 0;
  double max_error = 0.0;
};

inline std::vector<GradientSuiteResult> run_gradient_suite(std::uint64_t seed, int shapes_per_layer = 5) {
  Rng rng(seed);
  auto dim = [&](int lo, int hi) { return static_cast<nn::Index>(lo + static_cast<int>(rng.index(hi - lo + 1))); };
  std::vector<GradientSuiteResult> out;
  auto record = [&](const std::string& name, double err) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& r) { return r.layer == name; });
    if (it == out.end()) {
      out.push_back({name, 0, 0.0});
      it = std::prev(out.end());
    }
    it->shapes += 1;
    it->max_error = std::max(it->max_error, err);
  };

  for (int s = 0; s < shapes_per_layer; ++s) {
    {
      const nn::Conv1DSpec spec{dim(1, 4), dim(1, 5), dim(1, 3)};
      nn::Conv1D layer(spec, rng);
      for (nn::Index i = 0; i < layer.bias.value.size(); ++i) layer.bias.value.data()[i] = rng.normal();
      const auto x = random_tensor({dim(1, 3), spec.kernel + dim(0, 4), spec.in_channels}, rng);
      record("Conv1D", layer_gradient_error(layer, x, rng));
    }
    {
      nn::MaxPool1D layer(nn::MaxPool1DSpec{dim(1, 3)});
      const auto x = separated_tensor({dim(1, 3), layer.spec.pool * dim(1, 4) + dim(0, 1), dim(1, 4)}, rng);
      record("MaxPool1D", layer_gradient_error(layer, x, rng));
    }
    {
      const nn::Index c = dim(1, 4);
      nn::BatchNorm1D layer(nn::BatchNorm1DSpec{c});
      for (nn::Index i = 0; i < c; ++i) {
        layer.gamma.value(0, i) = rng.uniform(0.5, 1.5);
        layer.beta.value(0, i) = rng.normal();
      }
      const auto x = random_tensor({dim(2, 4), dim(1, 4), c}, rng);
      record("BatchNorm1D", layer_gradient_error(layer, x, rng));
    }
    {
      nn::ReLU layer;
      const auto x = separated_tensor({dim(1, 3), dim(1, 5), dim(1, 4)}, rng, 0.05);
      record("ReLU", layer_gradient_error(layer, x, rng));
    }
    {
      const nn::LSTMSpec spec{dim(1, 4), dim(1, 4)};
      nn::LSTM layer(spec, rng);
      for (nn::Index i = 0; i < layer.bias.value.size(); ++i) layer.bias.value.data()[i] = 0.5 * rng.normal();
      const auto x = random_tensor({dim(1, 3), dim(1, 5), spec.input_size}, rng);
      record("LSTM", layer_gradient_error(layer, x, rng));
    }
    {
      const nn::DenseSpec spec{dim(1, 6), dim(1, 5)};
      nn::Dense layer(spec, rng);
      for (nn::Index i = 0; i < layer.bias.value.size(); ++i) layer.bias.value.data()[i] = rng.normal();
      const auto x = random_tensor({dim(1, 4), spec.in}, rng);
      record("Dense", layer_gradient_error(layer, x, rng));
    }
    {
      nn::Dropout layer(nn::DropoutSpec{rng.uniform(0.1, 0.7)});
      const auto x = random_tensor({dim(1, 3), dim(1, 5), dim(1, 4)}, rng);
      Rng mask_rng(rng.next());
      layer.forward(x, mask_rng);
      layer.freeze_mask(true);
      record("Dropout", layer_gradient_error(layer, x, rng));
    }
    {
      nn::Softmax layer;
      const auto x = random_tensor({dim(1, 4), dim(2, 6)}, rng);
      record("Softmax", layer_gradient_error(layer, x, rng));
    }
    {
      nn::Flatten layer;
      const auto x = random_tensor({dim(1, 3), dim(1, 4), dim(1, 4)}, rng);
      record("Flatten", layer_gradient_error(layer, x, rng));
    }
    {
      const nn::Index b = dim(1, 5);
      const nn::Index classes = dim(2, 7);
      const auto logits = random_tensor({b, classes}, rng, 2.0);
      std::vector<int> labels;
      for (nn::Index i = 0; i < b; ++i) labels.push_back(static_cast<int>(rng.index(static_cast<std::uint64_t>(classes))));
      record("Softmax+CE", fused_softmax_ce_error(logits, labels));
    }
  }
  return out;
}

}  // namespace raga::testing
