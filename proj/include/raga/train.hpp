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
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "raga/featex.hpp"
#include "raga/manifest.hpp"
#include "raga/nn/model.hpp"
#include "raga/nn/optim.hpp"
#include "raga/notes.hpp"

namespace raga {

/// One fixed-length segment's features with its class.
struct Example {
  RowMatrix<float> features;  // [frames x bins]
  int label = 0;
  std::string recording_id;
};

struct Dataset {
  std::vector<Example> examples;
  LabelMap labels;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  Eigen::Index frames() const { return examples.empty() ? 0 : examples.front().features.rows(); }
  Eigen::Index bins() const { return examples.empty() ? 0 : examples.front().features.cols(); }
};

/// Segments a conditioned clip and extracts features for each segment.
std::vector<FeatureMatrix> featurize_clip(const AudioClip& clip, const FeatureConfig& cfg,
                                          const FilterBank<double>& fb);

/// Builds examples for every manifest row. `.rgfb` rows are read directly
/// (their config hash must match `cfg`); anything else is decoded as WAV and
/// run through resample -> trim -> segment -> features. Rows are processed
/// on `jobs` threads; output order follows the manifest.
Dataset load_dataset(const Manifest& manifest, const FeatureConfig& cfg, const LabelMap& labels, int jobs = 1);

enum class SplitMode { recording, clip };

SplitMode parse_split_mode(const std::string& name);
std::string to_string(SplitMode m);

struct TrainConfig {
  int max_epochs = 300;
  int batch_size = 256;
  int patience = 100;
  double train_fraction = 0.80;
  double learning_rate = 1e-3;
  /// Minimum validation-loss decrease that counts as an improvement.
  double min_delta = 1e-6;
  std::uint64_t seed = 0;
  SplitMode split_mode = SplitMode::recording;
  /// When false the metrics `seconds` column is written as 0, making the
  /// file a pure function of the seed.
  bool record_timing = true;

  void validate() const;
};

/// Per class, shuffles the class's units (recording ids, or rows in clip
/// mode) and sends round(n * train_fraction) of them, clamped to [1, n - 1],
/// to the training side.
std::pair<Manifest, Manifest> split_dataset(const Manifest& manifest, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

/// Monitors validation loss. Stops once `patience` consecutive epochs pass
/// without an improvement larger than min_delta, i.e. at best_epoch + patience.
class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_delta);

  /// Returns true if `val_loss` is a new best.
  bool observe(int epoch, double val_loss);
  bool should_stop() const { return epochs_since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  double min_delta_;
  int best_epoch_ = 0;
  double best_loss_;
  int epochs_since_best_ = 0;
};

struct TrainResult {
  nn::Model model;
  nn::AdamConfig adam_config;
  nn::AdamState adam_state;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam + cross-entropy minibatch training with early stopping on
/// validation loss. Parameters from the best epoch are restored on exit.
TrainResult train_model(const Dataset& train, const Dataset& validation, const nn::ModelConfig& model_cfg,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  /// counts[true][predicted]
  Eigen::MatrixXd confusion;

  Eigen::MatrixXd row_normalized_confusion() const;
};

EvalResult evaluate(const nn::Model& model, const Dataset& data, int batch_size = 64);

nn::Tensor to_batch(const std::vector<const RowMatrix<float>*>& features);

/// Average of per-segment class probabilities.
Eigen::VectorXd segment_average(const nn::Model& model, const std::vector<FeatureMatrix>& segments);

/// Ranked (raga, probability) pairs for a WAV file, most likely first.
std::vector<std::pair<std::string, double>> predict(const nn::Model& model, const std::string& wav_path,
                                                    const FeatureConfig& cfg, const LabelMap& labels);

/// CSV `epoch,train_loss,train_acc,val_loss,val_acc,seconds`.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const EpochRecord& r);

 private:
  std::string path_;
};

std::string format_metrics_row(const EpochRecord& r);
std::vector<EpochRecord> read_metrics(const std::string& path);

nlohmann::json to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const nlohmann::json& j, FeatureConfig base = {});
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace raga
