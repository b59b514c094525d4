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

#include "doctest.h"
#include "raga/errors.hpp"
#include "raga/nn/checkpoint.hpp"
#include "raga/nn/model.hpp"
#include "raga/nn/optim.hpp"
#include "support.hpp"

using namespace raga;
using namespace raga::nn;
using raga::testing::random_tensor;

namespace {

ModelConfig tiny_config(Index frames, Index bins, int classes, double dropout = 0.0, std::uint64_t seed = 1) {
  ArchitectureOptions arch;
  arch.conv_filters = 4;
  arch.lstm_units = 3;
  arch.dense_units = {5};
  arch.dropout = dropout;
  return make_model_config(frames, bins, classes, arch, seed);
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("tensor views and reshape") {
    Tensor t({2, 3, 4});
    for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    CHECK(t.rank() == 3);
    CHECK(t.matrix().rows() == 2);
    CHECK(t.matrix().cols() == 12);
    CHECK(t.item(1)(2, 3) == 23.0);
    CHECK(t.rows().rows() == 6);
    CHECK(t.reshaped({6, 4}).rows()(5, 3) == 23.0);
    CHECK_THROWS_AS(t.reshaped({5, 5}), DimensionError);
    CHECK(to_string(t.shape()) == "[2 x 3 x 4]");
    CHECK_THROWS_AS(Tensor({2, -1}), DimensionError);
    CHECK(Tensor({0, 3}).size() == 0);
  }

  TEST_CASE("every layer passes finite-difference gradient checks") {
    for (const auto& r : testing::run_gradient_suite(1234, 6)) {
      CAPTURE(r.layer);
      CHECK(r.shapes >= 5);
      CHECK(r.max_error < 1e-4);
    }
  }

  TEST_CASE("whole-model gradients match finite differences") {
    Rng rng(31);
    auto cfg = tiny_config(9, 5, 3);
    Model model(cfg);
    const auto x = random_tensor({3, 9, 5}, rng);
    const std::vector<int> labels{0, 2, 1};
    auto loss = [&] { return cross_entropy(model.forward(x, true), labels).loss; };
    const auto lr = cross_entropy(model.forward(x, true), labels);
    model.backward(lr.grad_logits);
    double worst = 0.0;
    for (Parameter* p : model.trainable_parameters()) {
      const Matrix g = p->grad;
      for (Index j = 0; j < p->value.size(); ++j) {
        const double saved = p->value.data()[j];
        p->value.data()[j] = saved + 1e-5;
        const double up = loss();
        p->value.data()[j] = saved - 1e-5;
        const double down = loss();
        p->value.data()[j] = saved;
        worst = std::max(worst, testing::relative_error(g.data()[j], (up - down) / 2e-5));
      }
    }
    CHECK(worst < 1e-4);
  }

  TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    Rng rng(4);
    Model model(tiny_config(8, 4, 3));
    model.forward(random_tensor({2, 8, 4}, rng), true);
    model.backward(Tensor({2, 3}));
    for (Parameter* p : model.trainable_parameters()) CHECK(p->grad.isZero(0.0));
  }

  TEST_CASE("dense gradient is the outer product of upstream grad and input") {
    Rng rng(8);
    Dense d(DenseSpec{3, 2}, rng);
    Tensor x({1, 3}, Vector::LinSpaced(3, 1.0, 3.0));
    Tensor dy({1, 2});
    dy[0] = 0.5;
    dy[1] = -2.0;
    d.forward(x, rng);
    const Tensor dx = d.backward(dy);
    Matrix expected(2, 3);
    expected << 0.5, 1.0, 1.5, -2.0, -4.0, -6.0;
    CHECK(d.weight.grad == expected);
    CHECK(d.bias.grad(0, 0) == 0.5);
    CHECK(d.bias.grad(1, 0) == -2.0);
    for (int j = 0; j < 3; ++j) CHECK(dx[j] == doctest::Approx(0.5 * d.weight.value(0, j) - 2.0 * d.weight.value(1, j)));
  }

  TEST_CASE("zero final layer gives uniform probabilities") {
    Rng rng(2);
    Model model(make_model_config(12, 56, 172, ArchitectureOptions{8, 3, 2, 4, {6}, 0.5}, 3));
    auto& last = std::get<Dense>(model.layers()[model.layers().size() - 2]);
    last.weight.value.setZero();
    last.bias.value.setZero();
    const Tensor p = model.infer(random_tensor({3, 12, 56}, rng));
    for (Index i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(1.0 / 172.0).epsilon(1e-12));
  }

  TEST_CASE("all-zero LSTM outputs zeros") {
    Rng rng(3);
    LSTM lstm(LSTMSpec{3, 4}, rng);
    for (Parameter* p : lstm.parameters()) p->value.setZero();
    const Tensor h = lstm.infer(random_tensor({2, 5, 3}, rng));
    CHECK(h.shape() == Shape{2, 5, 4});
    CHECK(h.flat().isZero(0.0));
  }

  TEST_CASE("center-tap convolution crops one frame at each end") {
    Rng rng(5);
    Conv1D conv(Conv1DSpec{1, 1, 3}, rng);
    conv.weight.value << 0.0, 1.0, 0.0;
    conv.bias.value.setZero();
    const Tensor x = random_tensor({2, 7, 1}, rng);
    const Tensor y = conv.infer(x);
    REQUIRE(y.shape() == Shape{2, 5, 1});
    for (Index b = 0; b < 2; ++b) {
      for (Index t = 0; t < 5; ++t) CHECK(y.item(b)(t, 0) == x.item(b)(t + 1, 0));
    }
  }

  TEST_CASE("softmax rows are probability vectors") {
    Rng rng(6);
    const Tensor p = softmax_rows(random_tensor({20, 9}, rng, 30.0));
    for (Index r = 0; r < 20; ++r) {
      CHECK(std::abs(p.matrix().row(r).sum() - 1.0) <= 1e-12);
      for (Index c = 0; c < 9; ++c) {
        CHECK(p.matrix()(r, c) >= 0.0);
        CHECK(p.matrix()(r, c) <= 1.0);
      }
    }
    Tensor huge({1, 3});
    huge[0] = 1000.0;
    huge[1] = 999.0;
    huge[2] = -1000.0;
    CHECK(softmax_rows(huge).all_finite());
  }

  TEST_CASE("cross entropy closed forms") {
    Tensor perfect({2, 3});
    perfect.matrix()(0, 1) = 1.0;
    perfect.matrix()(1, 2) = 1.0;
    CHECK(cross_entropy(perfect, std::vector<int>{1, 2}).loss == doctest::Approx(0.0).epsilon(1e-11));

    Tensor uniform({4, 172}, 1.0 / 172.0);
    CHECK(cross_entropy(uniform, std::vector<int>{0, 5, 17, 171}).loss == doctest::Approx(std::log(172.0)));
    CHECK(std::log(172.0) == doctest::Approx(5.147).epsilon(1e-4));

    Tensor one_hot({4, 172});
    for (int i = 0; i < 4; ++i) one_hot.matrix()(i, i) = 1.0;
    CHECK(cross_entropy(uniform, one_hot).loss == doctest::Approx(std::log(172.0)));
    CHECK_THROWS_AS(cross_entropy(uniform, std::vector<int>{0, 1}), DimensionError);
    CHECK_THROWS_AS(cross_entropy(uniform, std::vector<int>{0, 1, 2, 172}), DimensionError);
  }

  TEST_CASE("fused softmax cross-entropy gradient") {
    Rng rng(12);
    for (int trial = 0; trial < 5; ++trial) {
      const auto z = random_tensor({4, 6}, rng, 2.0);
      std::vector<int> labels;
      for (int i = 0; i < 4; ++i) labels.push_back(static_cast<int>(rng.index(6)));
      CHECK(testing::fused_softmax_ce_error(z, labels) < 1e-6);
    }
  }

  TEST_CASE("batch norm standardizes each channel in training mode") {
    Rng rng(13);
    BatchNorm1D bn(BatchNorm1DSpec{5, 0.99, 1e-12});
    Tensor x = random_tensor({8, 6, 5}, rng, 3.0);
    for (Index i = 0; i < x.size(); ++i) x[i] += static_cast<double>(i % 5) * 10.0;
    const Tensor y = bn.forward(x, rng);
    const auto rows = y.rows();
    for (Index c = 0; c < 5; ++c) {
      const double mean = rows.col(c).mean();
      const double var = (rows.col(c).array() - mean).square().mean();
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(var - 1.0) < 1e-6);
    }
    // Running statistics move toward the batch statistics.
    CHECK(bn.running_mean.value(0, 4) == doctest::Approx(0.01 * x.rows().col(4).mean()));
  }

  TEST_CASE("dropout keeps the expected activation and is the identity at inference") {
    Rng rng(14);
    Dropout d(DropoutSpec{0.5});
    const Tensor x({1, 100000}, 0.7);
    const Tensor y = d.forward(x, rng);
    CHECK(std::abs(y.flat().mean() - 0.7) <= 0.007);
    for (Index i = 0; i < y.size(); ++i) REQUIRE((y[i] == 0.0 || y[i] == doctest::Approx(1.4)));
    CHECK(d.infer(x) == x);
  }

  TEST_CASE("max pool matches a brute-force windowed max and routes to the first maximum") {
    Rng rng(15);
    MaxPool1D mp(MaxPool1DSpec{3});
    Tensor x = random_tensor({2, 10, 3}, rng);
    x.item(0)(4, 1) = x.item(0)(3, 1) = 50.0;
    const Tensor y = mp.forward(x, rng);
    REQUIRE(y.shape() == Shape{2, 3, 3});
    for (Index b = 0; b < 2; ++b) {
      for (Index t = 0; t < 3; ++t) {
        for (Index c = 0; c < 3; ++c) {
          double m = -1e300;
          for (Index k = 0; k < 3; ++k) m = std::max(m, x.item(b)(3 * t + k, c));
          CHECK(y.item(b)(t, c) == m);
        }
      }
    }
    const Tensor dx = mp.backward(Tensor(y.shape(), 1.0));
    CHECK(dx.item(0)(3, 1) == 1.0);
    CHECK(dx.item(0)(4, 1) == 0.0);
    CHECK(dx.flat().sum() == doctest::Approx(static_cast<double>(y.size())));
    for (Index b = 0; b < 2; ++b) {
      for (Index c = 0; c < 3; ++c) CHECK(dx.item(b)(9, c) == 0.0);
    }
  }

  TEST_CASE("backward without a forward pass is a state error") {
    Rng rng(16);
    Dense d(DenseSpec{2, 2}, rng);
    CHECK_THROWS_AS(d.backward(Tensor({1, 2})), StateError);
    LSTM l(LSTMSpec{2, 2}, rng);
    CHECK_THROWS_AS(l.backward(Tensor({1, 2, 2})), StateError);
    Model m(tiny_config(6, 3, 2));
    CHECK_THROWS_AS(m.backward(Tensor({1, 2})), StateError);
    m.forward(random_tensor({1, 6, 3}, rng), false);
    CHECK_THROWS_AS(m.backward(Tensor({1, 2})), StateError);
  }

  TEST_CASE("input shape and finiteness are checked") {
    Rng rng(17);
    Model m(tiny_config(6, 3, 2));
    CHECK_THROWS_AS(m.infer(random_tensor({1, 5, 3}, rng)), DimensionError);
    Tensor bad = random_tensor({1, 6, 3}, rng);
    bad[4] = std::numeric_limits<double>::quiet_NaN();
    try {
      m.infer(bad);
      FAIL("NaN accepted");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("Conv1D") != std::string::npos);
    }
  }

  TEST_CASE("model configs compose and validate") {
    auto cfg = tiny_config(10, 4, 3);
    CHECK(cfg.layer_shapes().back() == Shape{3});
    cfg.num_classes = 4;
    CHECK_THROWS_AS(cfg.layer_shapes(), DimensionError);
    auto no_softmax = tiny_config(10, 4, 3);
    no_softmax.layers.pop_back();
    CHECK_THROWS_AS(no_softmax.layer_shapes(), DimensionError);
    CHECK_THROWS_AS(make_model_config(2, 4, 3, ArchitectureOptions{}, 0), DimensionError);
  }

  TEST_CASE("parameter accounting") {
    const auto cfg = reference_model_config(100);
    const auto count = count_parameters(cfg);
    CHECK(count.layers[0].kind == "Conv1D");
    CHECK(count.layers[0].trainable == 10816);
    CHECK(count.layers[0].trainable == (3 * 56 + 1) * 64);
    CHECK(count.layers[2].kind == "BatchNorm1D");
    CHECK(count.layers[2].trainable == 128);
    CHECK(count.layers[2].non_trainable == 128);
    CHECK(count.layers[4].trainable == 4 * (512 * (64 + 512) + 512));
    CHECK(count.layers[9].trainable == 131328);
    CHECK(count.layers[12].trainable == (256 + 1) * 172);
    Index sum = 0;
    for (const auto& l : count.layers) sum += l.trainable;
    CHECK(sum == count.trainable);
    // Closed form agrees with the instantiated parameters.
    Model small(tiny_config(11, 4, 3));
    Index actual = 0;
    for (Parameter* p : small.trainable_parameters()) actual += p->value.size();
    CHECK(actual == small.count_parameters().trainable);
    CHECK(count.table().find("total") != std::string::npos);
  }

  TEST_CASE("seeded construction and training passes are deterministic") {
    Rng rng(18);
    const auto x = random_tensor({4, 10, 4}, rng);
    Model a(tiny_config(10, 4, 3, 0.5, 77));
    Model b(tiny_config(10, 4, 3, 0.5, 77));
    for (std::size_t i = 0; i < a.parameters().size(); ++i) CHECK(a.parameters()[i]->value == b.parameters()[i]->value);
    CHECK(a.forward(x, true) == b.forward(x, true));
    Model c(tiny_config(10, 4, 3, 0.5, 78));
    CHECK(c.parameters()[0]->value != a.parameters()[0]->value);
  }

  TEST_CASE("adam first step moves each parameter by lr * sign(g)") {
    Parameter p{"w", Matrix::Constant(2, 2, 1.0), Matrix(2, 2), true};
    p.grad << 0.3, -2.0, 5.0, -1e-3;
    Adam adam(AdamConfig{0.01}, {&p});
    adam.step();
    for (Index i = 0; i < 4; ++i) {
      const double g = p.grad.data()[i];
      CHECK(p.value.data()[i] == doctest::Approx(1.0 - 0.01 * g / (std::abs(g) + 1e-8)).epsilon(1e-14));
    }
  }

  TEST_CASE("adam with zero gradient leaves parameters and decays moments") {
    Parameter p{"w", Matrix::Constant(1, 3, 2.0), Matrix::Zero(1, 3), true};
    Adam adam(AdamConfig{}, {&p});
    adam.step();
    CHECK(p.value == Matrix::Constant(1, 3, 2.0));
    p.grad.setConstant(1.0);
    adam.step();
    const Matrix m = adam.state().first_moment[0];
    const Matrix v = adam.state().second_moment[0];
    p.grad.setZero();
    adam.step();
    CHECK(adam.state().first_moment[0].isApprox(0.9 * m));
    CHECK(adam.state().second_moment[0].isApprox(0.999 * v));
  }

  TEST_CASE("adam two-step hand trace with g = 1") {
    Parameter p{"w", Matrix::Zero(1, 1), Matrix::Ones(1, 1), true};
    Adam adam(AdamConfig{0.001}, {&p});
    // t=1: m=0.1, v=0.001, mhat=1, vhat=1. t=2: m=0.19, v=0.001999, mhat=1, vhat=1.
    adam.step();
    CHECK(p.value(0, 0) == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-13));
    adam.step();
    CHECK(adam.state().first_moment[0](0, 0) == doctest::Approx(0.19));
    CHECK(adam.state().second_moment[0](0, 0) == doctest::Approx(0.001999));
    CHECK(p.value(0, 0) == doctest::Approx(-0.002 / (1.0 + 1e-8)).epsilon(1e-12));
  }

  TEST_CASE("adam state shape checks") {
    Parameter p{"w", Matrix::Zero(2, 2), Matrix::Zero(2, 2), true};
    Adam adam(AdamConfig{}, {&p});
    AdamState bad;
    bad.first_moment = {Matrix::Zero(1, 1)};
    bad.second_moment = {Matrix::Zero(1, 1)};
    CHECK_THROWS_AS(adam.set_state(bad), DimensionError);
    CHECK_THROWS_AS(Adam(AdamConfig{-1.0}, {&p}), ConfigError);
  }

  TEST_CASE("checkpoints round trip bit-exactly") {
    Rng rng(19);
    Model model(tiny_config(10, 4, 3, 0.5, 5));
    model.forward(random_tensor({4, 10, 4}, rng), true);
    model.backward(random_tensor({4, 3}, rng));
    Adam adam(AdamConfig{0.002}, model.trainable_parameters());
    adam.step();
    model.round_to_storage_precision();
    adam.round_to_storage_precision();

    const nlohmann::json meta{{"labels", {"a", "b", "c"}}};
    const auto bytes = save_model(model, &adam, meta);
    const auto loaded = load_model(bytes);
    CHECK(loaded.metadata == meta);
    REQUIRE(loaded.adam_config.has_value());
    CHECK(loaded.adam_config->learning_rate == 0.002);
    CHECK(loaded.adam_state->step == 1);
    const auto& a = model.parameters();
    const auto b = loaded.model.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);
    for (std::size_t i = 0; i < adam.state().first_moment.size(); ++i) {
      CHECK(adam.state().first_moment[i] == loaded.adam_state->first_moment[i]);
      CHECK(adam.state().second_moment[i] == loaded.adam_state->second_moment[i]);
    }
    nn::Model copy = loaded.model;
    nn::Adam adam2(*loaded.adam_config, copy.trainable_parameters());
    adam2.set_state(*loaded.adam_state);
    CHECK(save_model(copy, &adam2, meta) == bytes);
    const Tensor x = random_tensor({2, 10, 4}, rng);
    CHECK(model.infer(x) == loaded.model.infer(x));

    const auto bare = save_model(model);
    const auto lb = load_model(bare);
    CHECK_FALSE(lb.adam_state.has_value());
    CHECK(save_model(lb.model) == bare);
  }

  TEST_CASE("corrupt checkpoints are rejected") {
    Model model(tiny_config(10, 4, 3));
    auto bytes = save_model(model);
    auto version = bytes;
    version[4] = 9;
    CHECK_THROWS_AS(load_model(version), FormatError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(load_model(magic), FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(load_model(trailing), FormatError);
    CHECK_THROWS_AS(load_model(std::span(bytes.data(), bytes.size() - 3)), FormatError);
  }

  TEST_CASE("layer specs survive json") {
    const auto cfg = reference_model_config(50, 56, 172, 9);
    const auto back = model_config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(back.seed == 9);
  }
}
