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

#include "raga/featex.hpp"

#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "bytes.hpp"

namespace raga {

namespace bytes {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace bytes

std::size_t StftConfig::num_frames(std::size_t len) const {
  const auto frame = static_cast<std::size_t>(frame_size);
  if (len < frame) return 0;
  return (len - frame) / static_cast<std::size_t>(hop_size) + 1;
}

void StftConfig::validate() const {
  if (frame_size <= 0 || (frame_size & (frame_size - 1)) != 0) {
    throw ConfigError("frame size must be a power of two, got " + std::to_string(frame_size));
  }
  if (hop_size <= 0 || hop_size > frame_size) throw ConfigError("hop size must lie in (0, frame size]");
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
}

void FeatureConfig::validate() const {
  segmentation.validate();
  stft.validate();
  if (segmentation.sample_rate != stft.sample_rate) {
    throw ConfigError("segmentation and STFT sample rates differ");
  }
  if (bank.num_bins <= 0) throw ConfigError("filter bank needs at least one bin");
  if (!(log_floor > 0.0)) throw ConfigError("log floor must be positive");
  if (segmentation.segment_samples() < static_cast<std::size_t>(stft.frame_size)) {
    throw ConfigError("segment is shorter than one STFT frame");
  }
}

std::string FeatureConfig::canonical() const {
  std::ostringstream os;
  os << std::setprecision(17) << "sr=" << stft.sample_rate << ";trim=" << segmentation.trim_fraction
     << ";segment=" << segmentation.segment_samples() << ";frame=" << stft.frame_size << ";hop=" << stft.hop_size
     << ";window=hann;bins=" << bank.num_bins << ";anchor=" << bank.anchor.midi << ";a4=" << bank.tuning_a4
     << ";floor=" << log_floor << ";compress=ln";
  return os.str();
}

std::uint64_t FeatureConfig::hash() const { return fnv1a64(canonical()); }

FilterBank<double> build_filterbank(const FeatureConfig& cfg) {
  return build_filterbank<double>(cfg.bank.num_bins, cfg.bank.anchor, cfg.stft, cfg.bank.tuning_a4);
}

FeatureMatrix extract_features(const AudioClip& clip, const FeatureConfig& cfg, const FilterBank<double>& fb) {
  const auto power = stft_power<double>(clip, cfg.stft);
  FeatureMatrix fm;
  fm.values = apply_filterbank<double>(power, fb, cfg.log_floor).cast<float>();
  fm.config_hash = cfg.hash();
  return fm;
}

std::vector<int> frame_argmax(const FeatureMatrix& fm) {
  std::vector<int> out(static_cast<std::size_t>(fm.num_frames()));
  for (Eigen::Index t = 0; t < fm.num_frames(); ++t) {
    Eigen::Index best = 0;
    fm.values.row(t).maxCoeff(&best);
    out[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return out;
}

std::vector<std::uint8_t> write_features(const FeatureMatrix& fm) {
  bytes::Writer w;
  w.tag("RGFB");
  w.u32(kFeatureFormatVersion);
  w.u32(static_cast<std::uint32_t>(fm.num_frames()));
  w.u32(static_cast<std::uint32_t>(fm.num_bins()));
  w.u64(fm.config_hash);
  for (Eigen::Index i = 0; i < fm.values.size(); ++i) w.f32(fm.values.data()[i]);
  return w.take();
}

FeatureMatrix read_features(std::span<const std::uint8_t> data) {
  bytes::Reader r(data);
  if (!r.tag("RGFB")) throw FormatError("bad feature file magic");
  if (const auto v = r.u32(); v != kFeatureFormatVersion) {
    throw FormatError("unsupported feature file version " + std::to_string(v));
  }
  const std::uint32_t frames = r.u32();
  const std::uint32_t bins = r.u32();
  FeatureMatrix fm;
  fm.config_hash = r.u64();
  const std::uint64_t count = static_cast<std::uint64_t>(frames) * bins;
  if (r.remaining() != count * 4) throw FormatError("feature payload size does not match header");
  fm.values.resize(frames, bins);
  for (std::uint64_t i = 0; i < count; ++i) fm.values.data()[i] = r.f32();
  return fm;
}

void write_feature_file(const std::string& path, const FeatureMatrix& fm) {
  bytes::write_file(path, write_features(fm));
}

FeatureMatrix read_feature_file(const std::string& path) {
  try {
    auto fm = read_features(bytes::read_file(path));
    fm.clip_id = path;
    return fm;
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace raga
