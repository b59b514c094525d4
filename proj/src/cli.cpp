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

#include "raga/cli.hpp"

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "raga/errors.hpp"
#include "raga/manifest.hpp"
#include "raga/nn/checkpoint.hpp"
#include "raga/preprocess.hpp"

namespace raga {
namespace fs = std::filesystem;
using nlohmann::json;

Preset desk_preset() {
  Preset p;
  p.name = "desk";
  p.features.segmentation.segment_seconds = 4.0;
  p.arch.conv_filters = 16;
  p.arch.lstm_units = 32;
  p.arch.dense_units = {32};
  p.arch.dropout = 0.2;
  p.train.max_epochs = 100;
  p.train.batch_size = 32;
  p.train.patience = 30;
  p.synth.clip_seconds = 5.0;
  p.synth.noise_db = -20.0;
  p.synth.detune_cents = 15.0;
  p.per_class = 40;
  p.shruti_set = {130.8127826502993, 196.0};
  return p;
}

Preset reference_preset() {
  Preset p;
  p.name = "reference";
  p.per_class = 1;
  p.shruti_set = {130.8127826502993};
  p.synth.clip_seconds = 40.0;
  return p;
}

Preset preset_by_name(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "reference") return reference_preset();
  throw ConfigError("unknown preset '" + name + "' (expected desk or reference)");
}

json to_json(const nn::ArchitectureOptions& a) {
  return {{"conv_filters", a.conv_filters}, {"kernel", a.kernel},         {"pool", a.pool},
          {"lstm_units", a.lstm_units},     {"dense_units", a.dense_units}, {"dropout", a.dropout}};
}

namespace {

void check_keys(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown " + what + " setting '" + key + "'");
  }
}

template <typename T>
void set_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

json synth_json(const Preset& p) {
  const auto& s = p.synth;
  return {{"note_seconds", s.note_seconds},
          {"clip_seconds", s.clip_seconds},
          {"gamaka", to_string(s.gamaka)},
          {"noise_db", s.noise_db},
          {"amplitude", s.amplitude},
          {"timbre", s.timbre == Timbre::sine ? "sine" : "three_harmonic"},
          {"detune_cents", s.detune_cents},
          {"per_class", p.per_class},
          {"shruti_set", p.shruti_set}};
}

void apply_synth(Preset& p, const json& j) {
  check_keys(j,
             {"note_seconds", "clip_seconds", "gamaka", "noise_db", "amplitude", "timbre", "detune_cents",
              "per_class", "shruti_set"},
             "synth");
  try {
    auto& s = p.synth;
    set_if(j, "note_seconds", s.note_seconds);
    set_if(j, "clip_seconds", s.clip_seconds);
    if (j.contains("gamaka")) s.gamaka = parse_gamaka(j.at("gamaka").get<std::string>());
    set_if(j, "noise_db", s.noise_db);
    set_if(j, "amplitude", s.amplitude);
    if (j.contains("timbre")) {
      const auto t = j.at("timbre").get<std::string>();
      if (t == "sine") {
        s.timbre = Timbre::sine;
      } else if (t == "three_harmonic") {
        s.timbre = Timbre::three_harmonic;
      } else {
        throw ConfigError("unknown timbre '" + t + "'");
      }
    }
    set_if(j, "detune_cents", s.detune_cents);
    set_if(j, "per_class", p.per_class);
    set_if(j, "shruti_set", p.shruti_set);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad synth config: ") + e.what());
  }
}

}  // namespace

nn::ArchitectureOptions architecture_from_json(const json& j, nn::ArchitectureOptions a) {
  check_keys(j, {"conv_filters", "kernel", "pool", "lstm_units", "dense_units", "dropout"}, "model");
  try {
    set_if(j, "conv_filters", a.conv_filters);
    set_if(j, "kernel", a.kernel);
    set_if(j, "pool", a.pool);
    set_if(j, "lstm_units", a.lstm_units);
    set_if(j, "dense_units", a.dense_units);
    set_if(j, "dropout", a.dropout);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config: ") + e.what());
  }
  if (a.conv_filters <= 0 || a.kernel <= 0 || a.pool <= 0 || a.lstm_units <= 0) {
    throw ConfigError("model sizes must be positive");
  }
  for (auto d : a.dense_units) {
    if (d <= 0) throw ConfigError("dense sizes must be positive");
  }
  if (!(a.dropout >= 0.0 && a.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  return a;
}

json to_json(const Preset& p) {
  return {{"preset", p.name},
          {"features", to_json(p.features)},
          {"model", to_json(p.arch)},
          {"train", to_json(p.train)},
          {"synth", synth_json(p)}};
}

Preset apply_config(Preset p, const json& j) {
  check_keys(j, {"preset", "features", "model", "train", "synth"}, "top-level");
  if (j.contains("features")) p.features = feature_config_from_json(j.at("features"), p.features);
  if (j.contains("model")) p.arch = architecture_from_json(j.at("model"), p.arch);
  if (j.contains("train")) p.train = train_config_from_json(j.at("train"), p.train);
  if (j.contains("synth")) apply_synth(p, j.at("synth"));
  return p;
}

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct Globals {
  std::string workdir = ".";
  std::string config;
  std::string preset = "desk";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  bool verbose = false;
};

class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {
    if (g_.jobs < 1) throw UsageError("--jobs must be at least 1");
    if (!fs::is_directory(g_.workdir)) throw UsageError("workdir " + g_.workdir + " is not a directory");
    preset_ = preset_by_name(g_.preset);
    if (!g_.config.empty()) {
      const auto path = resolve(g_.config);
      std::ifstream in(path);
      if (!in) throw UsageError("cannot open config file " + path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError("config file " + path + " is not valid JSON: " + e.what());
      }
      preset_ = apply_config(preset_, j);
    }
    if (g_.seed_set) {
      preset_.train.seed = g_.seed;
      preset_.synth.seed = g_.seed;
    } else {
      preset_.synth.seed = preset_.train.seed;
    }
  }

  std::string resolve(const std::string& p) const {
    const fs::path path(p);
    return (path.is_absolute() ? path : fs::path(g_.workdir) / path).lexically_normal().string();
  }

  Preset& preset() { return preset_; }
  const Globals& globals() const { return g_; }
  std::ostream& out() { return out_; }
  std::ostream& log() { return err_; }
  bool verbose() const { return g_.verbose; }

  /// Resolved settings plus command-specific arguments, written before any work.
  void write_run_log(const std::string& command, const json& args) {
    json log = to_json(preset_);
    log["command"] = command;
    log["seed"] = preset_.train.seed;
    log["jobs"] = g_.jobs;
    log["args"] = args;
    const fs::path dir = fs::path(resolve("logs"));
    fs::create_directories(dir);
    std::ofstream f(dir / (command + ".json"), std::ios::trunc);
    if (!f) throw DataError("cannot write run log in " + dir.string());
    f << log.dump(2) << "\n";
  }

 private:
  Globals g_;
  Preset preset_;
  std::ostream& out_;
  std::ostream& err_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

// ---- synth ------------------------------------------------------------

struct SynthArgs {
  std::string scales;
  std::string out_dir = "synth";
  int per_class = 0;
  std::string shruti;
  std::string gamaka;
};

int cmd_synth(Context& ctx, const SynthArgs& a) {
  const auto scales_path = ctx.resolve(a.scales);
  if (!fs::is_regular_file(scales_path)) throw UsageError("scales file " + scales_path + " does not exist");
  auto& p = ctx.preset();
  if (a.per_class > 0) p.per_class = a.per_class;
  if (!a.shruti.empty()) p.shruti_set = parse_number_list(a.shruti);
  if (!a.gamaka.empty()) p.synth.gamaka = parse_gamaka(a.gamaka);
  if (p.per_class <= 0) throw ConfigError("per-class count must be positive");
  p.synth.validate();

  DatasetSpec spec;
  spec.scales = read_scale_file(scales_path);
  spec.per_class = p.per_class;
  spec.shruti_set = p.shruti_set;
  spec.synth = p.synth;
  ctx.write_run_log("synth", {{"scales", a.scales}, {"out", a.out_dir}});
  const auto manifest = synth_dataset(spec, ctx.resolve(a.out_dir));
  ctx.out() << "wrote " << manifest.rows.size() << " clips for " << spec.scales.size() << " ragas to "
            << ctx.resolve(a.out_dir) << "\n";
  return kExitOk;
}

// ---- featurize --------------------------------------------------------

struct FeaturizeArgs {
  std::string manifest;
  std::string out_dir = "features";
  int frame_size = 0;
  int hop_size = 0;
  int num_bins = 0;
  std::string anchor;
  double segment_seconds = 0.0;
};

std::size_t expected_segments(const AudioClip& clip, const SegmentationConfig& seg) {
  std::size_t n = clip.size();
  if (clip.sample_rate != seg.sample_rate) {
    n = static_cast<std::size_t>(std::llround(static_cast<double>(n) * seg.sample_rate / clip.sample_rate));
  }
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(n) * seg.trim_fraction));
  const std::size_t kept = n - 2 * cut;
  const auto len = static_cast<std::size_t>(seg.segment_samples());
  return (kept + len - 1) / len;
}

std::string segment_file_name(const std::string& stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_s%03zu.rgfb", i);
  return stem + buf;
}

bool up_to_date(const fs::path& target, const fs::path& source, std::uint64_t hash) {
  std::error_code ec;
  if (!fs::is_regular_file(target, ec)) return false;
  if (fs::last_write_time(target, ec) < fs::last_write_time(source, ec) || ec) return false;
  try {
    return read_feature_file(target.string()).config_hash == hash;
  } catch (const Error&) {
    return false;
  }
}

int cmd_featurize(Context& ctx, const FeaturizeArgs& a) {
  auto& cfg = ctx.preset().features;
  if (a.frame_size > 0) cfg.stft.frame_size = a.frame_size;
  if (a.hop_size > 0) cfg.stft.hop_size = a.hop_size;
  if (a.num_bins > 0) cfg.bank.num_bins = a.num_bins;
  if (!a.anchor.empty()) cfg.bank.anchor = parse_note(a.anchor);
  if (a.segment_seconds > 0.0) cfg.segmentation.segment_seconds = a.segment_seconds;
  cfg.validate();
  const auto manifest_path = ctx.resolve(a.manifest);
  if (!fs::is_regular_file(manifest_path)) throw UsageError("manifest " + manifest_path + " does not exist");
  const Manifest in = read_manifest(manifest_path);
  const fs::path out_dir = ctx.resolve(a.out_dir);
  const auto fb = build_filterbank(cfg);
  const auto hash = cfg.hash();

  std::set<std::string> stems;
  for (const auto& row : in.rows) {
    if (fs::path(row.path).extension() != ".wav") throw DataError(row.path + ": featurize expects .wav rows");
    if (!stems.insert(fs::path(row.path).stem().string()).second) {
      throw DataError("two manifest rows share the file name " + fs::path(row.path).filename().string());
    }
  }
  ctx.write_run_log("featurize", {{"manifest", a.manifest}, {"out", a.out_dir}});
  fs::create_directories(out_dir);

  struct RowResult {
    std::vector<std::string> files;
    bool skipped = false;
  };
  std::vector<RowResult> results(in.rows.size());
  std::vector<std::exception_ptr> errors(in.rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < in.rows.size(); i = next++) {
      const auto& row = in.rows[i];
      const fs::path source = in.resolve(row);
      try {
        const auto stem = source.stem().string();
        const AudioClip clip = read_wav_file(source.string());
        const std::size_t count = expected_segments(clip, cfg.segmentation);
        auto& r = results[i];
        for (std::size_t s = 0; s < count; ++s) r.files.push_back(segment_file_name(stem, s));
        r.skipped = count > 0;
        for (const auto& f : r.files) r.skipped = r.skipped && up_to_date(out_dir / f, source, hash);
        if (r.skipped) continue;
        auto feats = featurize_clip(clip, cfg, fb);
        r.files.clear();
        for (std::size_t s = 0; s < feats.size(); ++s) {
          feats[s].clip_id = stem + "#" + std::to_string(s);
          r.files.push_back(segment_file_name(stem, s));
          write_feature_file((out_dir / r.files.back()).string(), feats[s]);
        }
      } catch (const Error& e) {
        try {
          throw;
        } catch (const NumericError&) {
          errors[i] = std::make_exception_ptr(NumericError(source.string() + ": " + e.what()));
        } catch (const DataError&) {
          errors[i] = std::make_exception_ptr(DataError(source.string() + ": " + e.what()));
        } catch (...) {
          errors[i] = std::make_exception_ptr(ConfigError(source.string() + ": " + e.what()));
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(ctx.globals().jobs, static_cast<int>(std::max<std::size_t>(1, in.rows.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Manifest out;
  out.base_dir = out_dir.string();
  std::size_t written = 0, skipped = 0;
  for (std::size_t i = 0; i < in.rows.size(); ++i) {
    (results[i].skipped ? skipped : written) += 1;
    for (const auto& f : results[i].files) out.rows.push_back({f, in.rows[i].raga, in.rows[i].recording_id,
                                                                in.rows[i].tonic_hz});
  }
  write_manifest((out_dir / "manifest.csv").string(), out);
  ctx.out() << "featurized " << written << " clips, skipped " << skipped << " up to date, " << out.rows.size()
            << " segments in " << (out_dir / "manifest.csv").string() << "\n";
  return kExitOk;
}

// ---- train / eval -----------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string out_dir = "run";
  int epochs = 0;
  std::string split_mode;
};

void print_record(std::ostream& os, const EpochRecord& r) {
  os << "epoch " << r.epoch << "  loss " << fmt(r.train_loss) << "  acc " << fmt(r.train_accuracy)
     << "  val_loss " << fmt(r.val_loss) << "  val_acc " << fmt(r.val_accuracy) << "\n";
}

int cmd_train(Context& ctx, const TrainArgs& a) {
  auto& p = ctx.preset();
  if (a.epochs > 0) {
    p.train.max_epochs = a.epochs;
    p.train.patience = std::min(p.train.patience, a.epochs);
  }
  if (!a.split_mode.empty()) p.train.split_mode = parse_split_mode(a.split_mode);
  p.train.validate();
  const auto manifest_path = ctx.resolve(a.manifest);
  if (!fs::is_regular_file(manifest_path)) throw UsageError("manifest " + manifest_path + " does not exist");
  const Manifest manifest = read_manifest(manifest_path);
  const LabelMap labels = manifest.labels();
  const auto [train_rows, val_rows] = split_dataset(manifest, p.train);
  ctx.write_run_log("train", {{"manifest", a.manifest}, {"out", a.out_dir}});

  const Dataset train = load_dataset(train_rows, p.features, labels, ctx.globals().jobs);
  const Dataset val = load_dataset(val_rows, p.features, labels, ctx.globals().jobs);
  const auto model_cfg = nn::make_model_config(train.frames(), train.bins(), labels.size(), p.arch, p.train.seed);
  ctx.out() << "training on " << train.size() << " segments, validating on " << val.size() << ", "
            << labels.size() << " ragas, " << nn::count_parameters(model_cfg).trainable
            << " trainable parameters\n";

  const fs::path out_dir = ctx.resolve(a.out_dir);
  fs::create_directories(out_dir);
  MetricsWriter metrics((out_dir / "metrics.csv").string());
  const auto result = train_model(train, val, model_cfg, p.train, [&](const EpochRecord& r) {
    metrics.write(r);
    if (ctx.verbose()) print_record(ctx.log(), r);
  });

  const auto ev = evaluate(result.model, val);
  json meta{{"labels", labels.names()},
            {"features", to_json(p.features)},
            {"train", to_json(p.train)},
            {"model_options", to_json(p.arch)},
            {"manifest", a.manifest},
            {"best_epoch", result.best_epoch},
            {"epochs_run", result.history.size()},
            {"val_loss", ev.loss},
            {"val_accuracy", ev.accuracy}};
  nn::Adam adam(result.adam_config, const_cast<nn::Model&>(result.model).trainable_parameters());
  adam.set_state(result.adam_state);
  nn::save_model_file((out_dir / "model.rgmd").string(), result.model, &adam, meta);

  ctx.out() << "epochs run " << result.history.size() << ", best epoch " << result.best_epoch << "\n"
            << "val_loss " << fmt(ev.loss) << "\nval_accuracy " << fmt(ev.accuracy) << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string model;
  std::string manifest;
  bool confusion = false;
};

LabelMap labels_from(const json& meta) {
  if (!meta.contains("labels")) throw FormatError("checkpoint has no label map");
  return LabelMap(meta.at("labels").get<std::vector<std::string>>());
}

int cmd_eval(Context& ctx, const EvalArgs& a) {
  const auto model_path = ctx.resolve(a.model);
  if (!fs::is_regular_file(model_path)) throw UsageError("model file " + model_path + " does not exist");
  auto loaded = nn::load_model_file(model_path);
  const json& meta = loaded.metadata;
  const LabelMap labels = labels_from(meta);
  FeatureConfig fcfg;
  TrainConfig tcfg;
  std::string manifest_arg = a.manifest;
  try {
    fcfg = feature_config_from_json(meta.at("features"));
    tcfg = train_config_from_json(meta.at("train"));
    if (manifest_arg.empty()) manifest_arg = meta.at("manifest").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata incomplete: ") + e.what());
  }
  ctx.write_run_log("eval", {{"model", a.model}, {"manifest", manifest_arg}});
  const Manifest manifest = read_manifest(ctx.resolve(manifest_arg));
  // With the checkpoint's own manifest, score the same validation split it was selected on.
  const Manifest rows = a.manifest.empty() ? split_dataset(manifest, tcfg).second : manifest;
  const Dataset data = load_dataset(rows, fcfg, labels, ctx.globals().jobs);
  const auto ev = evaluate(loaded.model, data);
  ctx.out() << "segments " << data.size() << "\nloss " << fmt(ev.loss) << "\naccuracy " << fmt(ev.accuracy)
            << "\n";
  if (a.confusion) {
    const auto norm = ev.row_normalized_confusion();
    for (int r = 0; r < labels.size(); ++r) {
      ctx.out() << labels.name(r);
      for (int c = 0; c < labels.size(); ++c) ctx.out() << "," << fmt(norm(r, c));
      ctx.out() << "\n";
    }
  }
  return kExitOk;
}

struct PredictArgs {
  std::string model;
  std::string audio;
  int top = 5;
};

int cmd_predict(Context& ctx, const PredictArgs& a) {
  if (a.top < 1) throw UsageError("--top must be at least 1");
  const auto model_path = ctx.resolve(a.model);
  if (!fs::is_regular_file(model_path)) throw UsageError("model file " + model_path + " does not exist");
  const auto audio_path = ctx.resolve(a.audio);
  if (!fs::is_regular_file(audio_path)) throw UsageError("audio file " + audio_path + " does not exist");
  auto loaded = nn::load_model_file(model_path);
  const LabelMap labels = labels_from(loaded.metadata);
  FeatureConfig fcfg;
  try {
    fcfg = feature_config_from_json(loaded.metadata.at("features"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata incomplete: ") + e.what());
  }
  ctx.write_run_log("predict", {{"model", a.model}, {"audio", a.audio}});
  const auto ranked = predict(loaded.model, audio_path, fcfg, labels);
  const auto n = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(a.top));
  for (std::size_t i = 0; i < n; ++i) ctx.out() << ranked[i].first << "\t" << fmt(ranked[i].second) << "\n";
  return kExitOk;
}

struct ParamsArgs {
  long long frames = 0;
  int classes = 0;
};

int cmd_params(Context& ctx, const ParamsArgs& a) {
  auto& p = ctx.preset();
  p.features.validate();
  const auto frames = a.frames > 0
                          ? static_cast<nn::Index>(a.frames)
                          : p.features.stft.num_frames(static_cast<std::size_t>(p.features.segmentation.segment_samples()));
  const int classes = a.classes > 0 ? a.classes : (p.name == "reference" ? 172 : 8);
  const auto cfg = nn::make_model_config(frames, p.features.bank.num_bins, classes, p.arch, p.train.seed);
  const auto count = nn::count_parameters(cfg);
  ctx.out() << "input " << frames << " x " << p.features.bank.num_bins << ", " << classes << " classes\n"
            << count.table();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Raga classification from note-grid filter-bank features", "raga"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--workdir", g.workdir, "Directory that relative paths resolve against");
  app.add_option("--config", g.config, "JSON file overriding preset values");
  app.add_option("--preset", g.preset, "Default settings: desk or reference")->check(CLI::IsMember({"desk", "reference"}));
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--jobs", g.jobs, "Worker threads for per-clip stages");
  app.add_flag("-v,--verbose", g.verbose, "Print per-epoch progress");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Render a labeled synthetic dataset");
  synth->add_option("--scales", sa.scales, "Scale file, one 'name,arohanam;avarohanam' per line")->required();
  synth->add_option("--out", sa.out_dir, "Output directory");
  synth->add_option("--per-class", sa.per_class, "Clips per raga");
  synth->add_option("--shruti", sa.shruti, "Comma-separated tonic frequencies in Hz");
  synth->add_option("--gamaka", sa.gamaka, "none, kampita or jaru");

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "Write per-segment feature files and their manifest");
  featurize->add_option("--manifest", fa.manifest, "Manifest of .wav rows")->required();
  featurize->add_option("--out", fa.out_dir, "Output directory");
  featurize->add_option("--frame-size", fa.frame_size, "STFT frame length (power of two)");
  featurize->add_option("--hop-size", fa.hop_size, "STFT hop");
  featurize->add_option("--num-bins", fa.num_bins, "Filter-bank size");
  featurize->add_option("--anchor", fa.anchor, "Lowest filter-bank note, e.g. B1");
  featurize->add_option("--segment-seconds", fa.segment_seconds, "Segment duration");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a classifier and write metrics and a checkpoint");
  train->add_option("--manifest", ta.manifest, "Manifest of .wav or .rgfb rows")->required();
  train->add_option("--out", ta.out_dir, "Output directory");
  train->add_option("--epochs", ta.epochs, "Maximum epochs");
  train->add_option("--split-mode", ta.split_mode, "recording or clip")->check(CLI::IsMember({"recording", "clip"}));

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint");
  eval->add_option("--model", ea.model, "Checkpoint file")->required();
  eval->add_option("--manifest", ea.manifest, "Score every row of this manifest instead of the validation split");
  eval->add_flag("--confusion", ea.confusion, "Print the row-normalized confusion matrix");

  PredictArgs pa;
  auto* pred = app.add_subcommand("predict", "Rank ragas for one recording");
  pred->add_option("--model", pa.model, "Checkpoint file")->required();
  pred->add_option("--audio", pa.audio, "WAV file")->required();
  pred->add_option("--top", pa.top, "Number of ragas to print");

  ParamsArgs qa;
  auto* params = app.add_subcommand("params", "Print the per-layer parameter table");
  params->add_option("--frames", qa.frames, "Input frames (default: one segment)");
  params->add_option("--classes", qa.classes, "Number of classes");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    Context ctx(g, out, err);
    if (*synth) return cmd_synth(ctx, sa);
    if (*featurize) return cmd_featurize(ctx, fa);
    if (*train) return cmd_train(ctx, ta);
    if (*eval) return cmd_eval(ctx, ea);
    if (*pred) return cmd_predict(ctx, pa);
    if (*params) return cmd_params(ctx, qa);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace raga
