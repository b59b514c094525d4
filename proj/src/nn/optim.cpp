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

#include "raga/nn/optim.hpp"

#include <cmath>

#include "raga/errors.hpp"

namespace raga::nn {

Adam::Adam(AdamConfig cfg, std::vector<Parameter*> params) : config_(cfg), params_(std::move(params)) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  for (const Parameter* p : params_) {
    state_.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    state_.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double correct1 = 1.0 - std::pow(config_.beta1, t);
  const double correct2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Matrix& m = state_.first_moment[i];
    Matrix& v = state_.second_moment[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * p.grad;
    v = config_.beta2 * v + (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        config_.learning_rate * (m.array() / correct1) / ((v.array() / correct2).sqrt() + config_.epsilon);
  }
}

void Adam::round_to_storage_precision() {
  for (auto* moments : {&state_.first_moment, &state_.second_moment}) {
    for (Matrix& m : *moments) m = m.cast<float>().cast<double>();
  }
}

void Adam::set_state(AdamState state) {
  if (state.first_moment.size() != params_.size() || state.second_moment.size() != params_.size()) {
    throw DimensionError("optimizer state does not match parameter count");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i]->value;
    for (const Matrix* m : {&state.first_moment[i], &state.second_moment[i]}) {
      if (m->rows() != p.rows() || m->cols() != p.cols()) {
        throw DimensionError("optimizer moment shape does not match " + params_[i]->name);
      }
    }
  }
  state_ = std::move(state);
}

}  // namespace raga::nn
