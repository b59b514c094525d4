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

#include "raga/train.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "raga/errors.hpp"
#include "raga/preprocess.hpp"
#include "raga/rng.hpp"

namespace raga {
namespace {

using nlohmann::json;

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool is_feature_file(const std::string& path) {
  return std::filesystem::path(path).extension() == ".rgfb";
}

std::vector<Example> load_row(const Manifest& manifest, const ManifestRow& row, const FeatureConfig& cfg,
                              const FilterBank<double>& fb, const LabelMap& labels) {
  const int label = labels.id(row.raga);
  const std::string path = manifest.resolve(row);
  std::vector<Example> out;
  if (is_feature_file(path)) {
    auto fm = read_feature_file(path);
    if (fm.config_hash != cfg.hash()) {
      throw DataError(path + ": feature file was built with a different feature configuration");
    }
    out.push_back(Example{std::move(fm.values), label, row.recording_id});
    return out;
  }
  AudioClip clip;
  try {
    clip = read_wav_file(path);
  } catch (const DataError& e) {
    throw DataError(e.what());
  }
  try {
    for (auto& fm : featurize_clip(clip, cfg, fb)) out.push_back(Example{std::move(fm.values), label, row.recording_id});
  } catch (const Error& e) {
    throw DataError(path + ": " + e.what());
  }
  return out;
}

// Copies of every parameter block (including batch-norm statistics).
std::vector<nn::Matrix> snapshot(nn::Model& model) {
  std::vector<nn::Matrix> out;
  for (const nn::Parameter* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(nn::Model& model, const std::vector<nn::Matrix>& values) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

template <typename T>
void set_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError(std::string("unknown ") + what + " setting '" + key + "'");
  }
}

}  // namespace

std::vector<FeatureMatrix> featurize_clip(const AudioClip& clip, const FeatureConfig& cfg,
                                          const FilterBank<double>& fb) {
  cfg.validate();
  std::vector<FeatureMatrix> out;
  for (const auto& seg : condition(clip, cfg.segmentation)) out.push_back(extract_features(seg, cfg, fb));
  return out;
}

Dataset load_dataset(const Manifest& manifest, const FeatureConfig& cfg, const LabelMap& labels, int jobs) {
  cfg.validate();
  const auto fb = build_filterbank(cfg);
  const std::size_t n = manifest.rows.size();
  std::vector<std::vector<Example>> per_row(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        per_row[i] = load_row(manifest, manifest.rows[i], cfg, fb, labels);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Dataset data;
  data.labels = labels;
  for (auto& row : per_row) {
    for (auto& ex : row) data.examples.push_back(std::move(ex));
  }
  for (const auto& ex : data.examples) {
    if (ex.features.rows() != data.frames() || ex.features.cols() != data.bins()) {
      throw DataError("feature shapes differ within the dataset");
    }
  }
  return data;
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "recording") return SplitMode::recording;
  if (name == "clip") return SplitMode::clip;
  throw ConfigError("unknown split mode '" + name + "' (expected recording or clip)");
}

std::string to_string(SplitMode m) { return m == SplitMode::recording ? "recording" : "clip"; }

void TrainConfig::validate() const {
  if (max_epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  if (patience <= 0 || patience > max_epochs) throw ConfigError("patience must lie in [1, epochs]");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (min_delta < 0.0) throw ConfigError("min delta must be non-negative");
}

std::pair<Manifest, Manifest> split_dataset(const Manifest& manifest, const TrainConfig& cfg) {
  cfg.validate();
  manifest.validate(false);
  if (manifest.rows.empty()) throw SplitError("cannot split an empty manifest");

  std::map<std::string, std::string> recording_raga;
  for (const auto& row : manifest.rows) {
    const auto [it, fresh] = recording_raga.emplace(row.recording_id, row.raga);
    if (!fresh && it->second != row.raga) {
      throw DataError("recording " + row.recording_id + " is labeled both " + it->second + " and " + row.raga);
    }
  }

  auto unit_of = [&](std::size_t i) {
    return cfg.split_mode == SplitMode::recording ? manifest.rows[i].recording_id : std::to_string(i);
  };

  const LabelMap labels = manifest.labels();
  std::vector<std::vector<std::string>> units(static_cast<std::size_t>(labels.size()));
  std::set<std::string> seen;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto u = unit_of(i);
    if (seen.insert(u).second) units[static_cast<std::size_t>(labels.id(manifest.rows[i].raga))].push_back(u);
  }

  Rng rng(cfg.seed);
  std::set<std::string> train_units;
  for (int c = 0; c < labels.size(); ++c) {
    auto& list = units[static_cast<std::size_t>(c)];
    if (list.size() < 2) {
      throw SplitError("raga " + labels.name(c) + " has a single " +
                       (cfg.split_mode == SplitMode::recording
                            ? std::string("recording; a recording-level split needs two (use clip-level splitting "
                                          "to split its segments instead)")
                            : std::string("clip; it cannot appear on both sides")));
    }
    rng.shuffle(std::span(list));
    const auto n = static_cast<long long>(list.size());
    const long long n_train = std::clamp(std::llround(static_cast<double>(n) * cfg.train_fraction), 1LL, n - 1);
    train_units.insert(list.begin(), list.begin() + n_train);
  }

  Manifest train, validation;
  train.base_dir = validation.base_dir = manifest.base_dir;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    (train_units.count(unit_of(i)) ? train : validation).rows.push_back(manifest.rows[i]);
  }
  return {std::move(train), std::move(validation)};
}

EarlyStopping::EarlyStopping(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_loss_(std::numeric_limits<double>::infinity()) {
  if (patience <= 0) throw ConfigError("patience must be positive");
}

bool EarlyStopping::observe(int epoch, double val_loss) {
  if (val_loss < best_loss_ - min_delta_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

nn::Tensor to_batch(const std::vector<const RowMatrix<float>*>& features) {
  if (features.empty()) throw DimensionError("empty batch");
  const auto frames = features.front()->rows();
  const auto bins = features.front()->cols();
  nn::Tensor x({static_cast<nn::Index>(features.size()), frames, bins});
  for (std::size_t b = 0; b < features.size(); ++b) {
    if (features[b]->rows() != frames || features[b]->cols() != bins) throw DimensionError("ragged batch");
    x.item(static_cast<nn::Index>(b)) = features[b]->cast<double>();
  }
  return x;
}

TrainResult train_model(const Dataset& train, const Dataset& validation, const nn::ModelConfig& model_cfg,
                        const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw ConfigError("training split is empty");
  if (validation.empty()) throw ConfigError("validation split is empty");
  if (train.frames() != model_cfg.input_frames || train.bins() != model_cfg.input_bins) {
    throw DimensionError("features are " + std::to_string(train.frames()) + "x" + std::to_string(train.bins()) +
                         " but the model expects " + std::to_string(model_cfg.input_frames) + "x" +
                         std::to_string(model_cfg.input_bins));
  }

  TrainResult result{nn::Model(model_cfg), nn::AdamConfig{cfg.learning_rate}, {}, {}, 0, false};
  nn::Model& model = result.model;
  model.round_to_storage_precision();
  nn::Adam adam(result.adam_config, model.trainable_parameters());

  Rng order_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  EarlyStopping stopper(cfg.patience, cfg.min_delta);
  std::vector<nn::Matrix> best = snapshot(model);
  nn::AdamState best_state = adam.state();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    order_rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    try {
      for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch_size));
        std::vector<const RowMatrix<float>*> feats;
        std::vector<int> labels;
        for (std::size_t i = first; i < last; ++i) {
          feats.push_back(&train.examples[order[i]].features);
          labels.push_back(train.examples[order[i]].label);
        }
        const nn::Tensor probs = model.forward(to_batch(feats), true);
        const auto loss = nn::cross_entropy(probs, labels);
        model.backward(loss.grad_logits);
        adam.step();
        model.round_to_storage_precision();
        adam.round_to_storage_precision();

        loss_sum += loss.loss * static_cast<double>(labels.size());
        const auto pred = nn::argmax_rows(probs);
        for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
      }
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const auto ev = evaluate(model, validation);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.val_loss = ev.loss;
    rec.val_accuracy = ev.accuracy;
    rec.seconds = cfg.record_timing
                      ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                      : 0.0;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (stopper.observe(epoch, ev.loss)) {
      best = snapshot(model);
      best_state = adam.state();
    }
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }

  restore(model, best);
  result.adam_state = std::move(best_state);
  result.best_epoch = stopper.best_epoch();
  return result;
}

Eigen::MatrixXd EvalResult::row_normalized_confusion() const {
  Eigen::MatrixXd out = confusion;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double s = out.row(r).sum();
    if (s > 0.0) out.row(r) /= s;
  }
  return out;
}

EvalResult evaluate(const nn::Model& model, const Dataset& data, int batch_size) {
  if (data.empty()) throw DataError("cannot evaluate on an empty dataset");
  const int classes = model.config().num_classes;
  EvalResult r;
  r.confusion = Eigen::MatrixXd::Zero(classes, classes);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t first = 0; first < data.size(); first += static_cast<std::size_t>(batch_size)) {
    const std::size_t last = std::min(data.size(), first + static_cast<std::size_t>(batch_size));
    std::vector<const RowMatrix<float>*> feats;
    for (std::size_t i = first; i < last; ++i) feats.push_back(&data.examples[i].features);
    const nn::Tensor probs = model.infer(to_batch(feats));
    const auto pred = nn::argmax_rows(probs);
    for (std::size_t i = first; i < last; ++i) {
      const int y = data.examples[i].label;
      if (y < 0 || y >= classes) throw DataError("label " + std::to_string(y) + " outside the model's classes");
      const auto b = static_cast<nn::Index>(i - first);
      loss_sum -= std::log(probs.matrix()(b, y) + nn::kCrossEntropyEpsilon);
      correct += pred[i - first] == y;
      r.confusion(y, pred[i - first]) += 1.0;
    }
  }
  r.loss = loss_sum / static_cast<double>(data.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return r;
}

Eigen::VectorXd segment_average(const nn::Model& model, const std::vector<FeatureMatrix>& segments) {
  if (segments.empty()) throw DataError("no segments to classify");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.config().num_classes);
  constexpr std::size_t kChunk = 16;
  for (std::size_t first = 0; first < segments.size(); first += kChunk) {
    const std::size_t last = std::min(segments.size(), first + kChunk);
    std::vector<const RowMatrix<float>*> feats;
    for (std::size_t i = first; i < last; ++i) feats.push_back(&segments[i].values);
    sum += model.infer(to_batch(feats)).matrix().colwise().sum().transpose();
  }
  return sum / static_cast<double>(segments.size());
}

std::vector<std::pair<std::string, double>> predict(const nn::Model& model, const std::string& wav_path,
                                                    const FeatureConfig& cfg, const LabelMap& labels) {
  if (labels.size() != model.config().num_classes) {
    throw ConfigError("label map has " + std::to_string(labels.size()) + " ragas but the model has " +
                      std::to_string(model.config().num_classes) + " classes");
  }
  const auto fb = build_filterbank(cfg);
  const Eigen::VectorXd probs = segment_average(model, featurize_clip(read_wav_file(wav_path), cfg, fb));
  std::vector<std::pair<std::string, double>> ranked;
  for (int c = 0; c < labels.size(); ++c) ranked.emplace_back(labels.name(c), probs(c));
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

std::string format_metrics_row(const EpochRecord& r) {
  return std::to_string(r.epoch) + "," + shortest(r.train_loss) + "," + shortest(r.train_accuracy) + "," +
         shortest(r.val_loss) + "," + shortest(r.val_accuracy) + "," + shortest(r.seconds);
}

MetricsWriter::MetricsWriter(const std::string& path) : path_(path) {
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write metrics file " + path_);
  out << "epoch,train_loss,train_acc,val_loss,val_acc,seconds\n";
}

void MetricsWriter::write(const EpochRecord& r) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot append to metrics file " + path_);
  out << format_metrics_row(r) << "\n";
}

std::vector<EpochRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics file " + path);
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,train_acc,val_loss,val_acc,seconds") throw FormatError("bad metrics header");
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[6];
    for (auto& field : f) {
      if (!std::getline(row, field, ',')) throw FormatError("short metrics row: " + line);
    }
    try {
      out.push_back(EpochRecord{std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                                std::stod(f[4]), std::stod(f[5])});
    } catch (const std::exception&) {
      throw FormatError("bad metrics row: " + line);
    }
  }
  return out;
}

json to_json(const FeatureConfig& cfg) {
  return {{"sample_rate", cfg.stft.sample_rate},      {"trim_fraction", cfg.segmentation.trim_fraction},
          {"segment_seconds", cfg.segmentation.segment_seconds}, {"frame_size", cfg.stft.frame_size},
          {"hop_size", cfg.stft.hop_size},            {"num_bins", cfg.bank.num_bins},
          {"anchor", note_name(cfg.bank.anchor)},      {"tuning_a4", cfg.bank.tuning_a4},
          {"log_floor", cfg.log_floor}};
}

FeatureConfig feature_config_from_json(const json& j, FeatureConfig cfg) {
  reject_unknown(j,
                 {"sample_rate", "trim_fraction", "segment_seconds", "frame_size", "hop_size", "num_bins", "anchor",
                  "tuning_a4", "log_floor"},
                 "feature");
  try {
    set_if(j, "sample_rate", cfg.stft.sample_rate);
    cfg.segmentation.sample_rate = cfg.stft.sample_rate;
    set_if(j, "trim_fraction", cfg.segmentation.trim_fraction);
    set_if(j, "segment_seconds", cfg.segmentation.segment_seconds);
    set_if(j, "frame_size", cfg.stft.frame_size);
    set_if(j, "hop_size", cfg.stft.hop_size);
    set_if(j, "num_bins", cfg.bank.num_bins);
    if (j.contains("anchor")) cfg.bank.anchor = parse_note(j.at("anchor").get<std::string>());
    set_if(j, "tuning_a4", cfg.bank.tuning_a4);
    set_if(j, "log_floor", cfg.log_floor);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad feature config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.max_epochs},          {"batch_size", cfg.batch_size},
          {"patience", cfg.patience},          {"train_fraction", cfg.train_fraction},
          {"learning_rate", cfg.learning_rate}, {"min_delta", cfg.min_delta},
          {"seed", cfg.seed},                  {"split_mode", to_string(cfg.split_mode)},
          {"record_timing", cfg.record_timing}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig cfg) {
  reject_unknown(j,
                 {"epochs", "batch_size", "patience", "train_fraction", "learning_rate", "min_delta", "seed",
                  "split_mode", "record_timing"},
                 "training");
  try {
    set_if(j, "epochs", cfg.max_epochs);
    set_if(j, "batch_size", cfg.batch_size);
    set_if(j, "patience", cfg.patience);
    set_if(j, "train_fraction", cfg.train_fraction);
    set_if(j, "learning_rate", cfg.learning_rate);
    set_if(j, "min_delta", cfg.min_delta);
    set_if(j, "seed", cfg.seed);
    if (j.contains("split_mode")) cfg.split_mode = parse_split_mode(j.at("split_mode").get<std::string>());
    set_if(j, "record_timing", cfg.record_timing);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace raga
