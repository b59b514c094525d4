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

#include "raga/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "raga/errors.hpp"
#include "raga/rng.hpp"

namespace raga {
namespace {

double effective_note_seconds(const ScaleSpec& scale, const SynthConfig& cfg) {
  return cfg.clip_seconds > 0.0 ? cfg.clip_seconds / static_cast<double>(scale.note_count()) : cfg.note_seconds;
}

std::vector<double> swara_ratios(const ScaleSpec& scale) {
  auto r = scale.arohanam_ratios();
  const auto down = scale.avarohanam_ratios();
  r.insert(r.end(), down.begin(), down.end());
  return r;
}

std::vector<std::size_t> note_boundaries(std::size_t notes, double note_seconds, int rate) {
  std::vector<std::size_t> b(notes + 1);
  for (std::size_t i = 0; i <= notes; ++i) {
    b[i] = static_cast<std::size_t>(std::llround(static_cast<double>(i) * note_seconds * rate));
  }
  return b;
}

// Semitone offset from the note's base pitch at sample n of a note that is
// `note_len` samples long.
double gamaka_offset(Gamaka mode, const SynthConfig& cfg, std::size_t n, std::size_t note_len) {
  const double t = static_cast<double>(n) / cfg.sample_rate;
  switch (mode) {
    case Gamaka::none:
      return 0.0;
    case Gamaka::kampita:
      return cfg.kampita_depth_semitones * std::sin(2.0 * M_PI * cfg.kampita_rate_hz * t);
    case Gamaka::jaru: {
      const double glide = cfg.jaru_fraction * static_cast<double>(note_len) / cfg.sample_rate;
      if (t >= glide) return 0.0;
      const double start = cfg.jaru_from_below ? -cfg.jaru_semitones : cfg.jaru_semitones;
      return start * (1.0 - t / glide);
    }
  }
  return 0.0;
}

// Clip-level tonic after the seeded detune draw. Always consumes one draw so
// the noise stream does not depend on detune settings.
double clip_tonic(const SynthConfig& cfg, Rng& rng) {
  const double cents = rng.uniform(-1.0, 1.0) * cfg.detune_cents;
  return cfg.tonic_hz * std::exp2(cents / 1200.0);
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
  return out;
}

}  // namespace

Gamaka parse_gamaka(const std::string& name) {
  if (name == "none") return Gamaka::none;
  if (name == "kampita") return Gamaka::kampita;
  if (name == "jaru") return Gamaka::jaru;
  throw ConfigError("unknown gamaka '" + name + "' (expected none, kampita or jaru)");
}

std::string to_string(Gamaka g) {
  switch (g) {
    case Gamaka::none: return "none";
    case Gamaka::kampita: return "kampita";
    case Gamaka::jaru: return "jaru";
  }
  return "none";
}

void SynthConfig::validate() const {
  if (!(tonic_hz > 0.0)) throw ConfigError("tonic must be positive");
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (clip_seconds <= 0.0 && !(note_seconds > crossfade_seconds)) {
    throw ConfigError("note duration must exceed the cross-fade");
  }
  if (!(amplitude > 0.0 && amplitude <= 1.0)) throw ConfigError("amplitude must lie in (0, 1]");
  if (crossfade_seconds < 0.0) throw ConfigError("cross-fade must be non-negative");
  if (!(jaru_fraction > 0.0 && jaru_fraction <= 1.0)) throw ConfigError("jaru fraction must lie in (0, 1]");
  if (detune_cents < 0.0) throw ConfigError("detune must be non-negative");
}

double gamaka_excursion(Gamaka mode, const SynthConfig& cfg) {
  switch (mode) {
    case Gamaka::none: return 0.0;
    case Gamaka::kampita: return std::abs(cfg.kampita_depth_semitones);
    case Gamaka::jaru: return std::abs(cfg.jaru_semitones);
  }
  return 0.0;
}

std::vector<double> synth_gamaka(double base_ratio, Gamaka mode, const SynthConfig& cfg) {
  const auto len = static_cast<std::size_t>(std::llround(cfg.note_seconds * cfg.sample_rate));
  const double base = cfg.tonic_hz * base_ratio;
  std::vector<double> out(len);
  for (std::size_t n = 0; n < len; ++n) out[n] = base * std::exp2(gamaka_offset(mode, cfg, n, len) / 12.0);
  return out;
}

std::size_t synth_clip_length(const ScaleSpec& scale, const SynthConfig& cfg) {
  return note_boundaries(scale.note_count(), effective_note_seconds(scale, cfg), cfg.sample_rate).back();
}

std::vector<double> synth_pitch_track(const ScaleSpec& scale, const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double tonic = clip_tonic(cfg, rng);
  const auto ratios = swara_ratios(scale);
  const auto bounds = note_boundaries(ratios.size(), effective_note_seconds(scale, cfg), cfg.sample_rate);
  std::vector<double> track(bounds.back());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const std::size_t len = bounds[i + 1] - bounds[i];
    for (std::size_t n = 0; n < len; ++n) {
      track[bounds[i] + n] = tonic * ratios[i] * std::exp2(gamaka_offset(cfg.gamaka, cfg, n, len) / 12.0);
    }
  }
  return track;
}

AudioClip synth_scale_clip(const ScaleSpec& scale, const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double tonic = clip_tonic(cfg, rng);
  const auto ratios = swara_ratios(scale);
  const double note_seconds = effective_note_seconds(scale, cfg);
  const auto bounds = note_boundaries(ratios.size(), note_seconds, cfg.sample_rate);
  const std::size_t total = bounds.back();

  const double excursion = std::exp2(gamaka_excursion(cfg.gamaka, cfg) / 12.0);
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  if (tonic * *hi * excursion > cfg.max_pitch_hz || tonic * *lo / excursion < cfg.min_pitch_hz) {
    throw RangeError(scale.name() + " at tonic " + std::to_string(tonic) + " Hz leaves the pitch range [" +
                     std::to_string(cfg.min_pitch_hz) + ", " + std::to_string(cfg.max_pitch_hz) + "] Hz");
  }

  const auto half_fade = static_cast<std::size_t>(std::llround(cfg.crossfade_seconds * cfg.sample_rate / 2.0));
  std::vector<double> signal(total, 0.0);
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const std::size_t begin = bounds[i];
    const std::size_t end = bounds[i + 1];
    const std::size_t len = end - begin;
    const bool fade_in = i > 0 && half_fade > 0;
    const bool fade_out = i + 1 < ratios.size() && half_fade > 0;
    const std::size_t from = fade_in ? begin - std::min(half_fade, begin) : begin;
    const std::size_t to = fade_out ? std::min(end + half_fade, total) : end;

    double phase = 0.0;
    for (std::size_t n = from; n < to; ++n) {
      // Pitch is held at the note's first/last value outside its own span.
      const std::size_t local = n < begin ? 0 : std::min(n - begin, len - 1);
      const double f = tonic * ratios[i] * std::exp2(gamaka_offset(cfg.gamaka, cfg, local, len) / 12.0);
      double gain = 1.0;
      if (fade_in && n < begin + half_fade) {
        const double u = (static_cast<double>(n - (begin - half_fade)) + 0.5) / (2.0 * half_fade);
        gain = 0.5 * (1.0 - std::cos(M_PI * u));
      } else if (fade_out && n >= end - half_fade) {
        const double u = (static_cast<double>(n - (end - half_fade)) + 0.5) / (2.0 * half_fade);
        gain = 0.5 * (1.0 + std::cos(M_PI * u));
      }
      double v = std::sin(phase);
      if (cfg.timbre == Timbre::three_harmonic) {
        v = (v + 0.5 * std::sin(2.0 * phase) + 0.25 * std::sin(3.0 * phase)) / 1.75;
      }
      signal[n] += gain * cfg.amplitude * v;
      phase = std::fmod(phase + 2.0 * M_PI * f / cfg.sample_rate, 2.0 * M_PI);
    }
  }

  if (cfg.noise_db > -120.0 && total > 0) {
    double energy = 0.0;
    for (double s : signal) energy += s * s;
    const double sigma = std::sqrt(energy / static_cast<double>(total)) * std::pow(10.0, cfg.noise_db / 20.0);
    for (double& s : signal) s += sigma * rng.normal();
  }

  AudioClip clip;
  clip.sample_rate = cfg.sample_rate;
  clip.samples.resize(total);
  for (std::size_t n = 0; n < total; ++n) clip.samples[n] = static_cast<float>(std::clamp(signal[n], -1.0, 1.0));
  return clip;
}

Manifest synth_dataset(const DatasetSpec& spec, const std::string& out_dir) {
  if (spec.scales.empty()) throw ConfigError("no scales to synthesize");
  if (spec.per_class <= 0) throw ConfigError("per-class count must be positive");
  if (spec.shruti_set.empty()) throw ConfigError("shruti set is empty");
  std::filesystem::create_directories(out_dir);

  Manifest manifest;
  manifest.base_dir = out_dir;
  for (std::size_t c = 0; c < spec.scales.size(); ++c) {
    const auto& scale = spec.scales[c];
    for (int i = 0; i < spec.per_class; ++i) {
      SynthConfig cfg = spec.synth;
      cfg.tonic_hz = spec.shruti_set[static_cast<std::size_t>(i) % spec.shruti_set.size()];
      cfg.seed = spec.synth.seed + c * static_cast<std::uint64_t>(spec.per_class) + static_cast<std::uint64_t>(i);
      char idx[16];
      std::snprintf(idx, sizeof idx, "%03d", i);
      const std::string id = sanitize(scale.name()) + "_" + idx;
      const std::string file = id + ".wav";
      write_wav_file((std::filesystem::path(out_dir) / file).string(), synth_scale_clip(scale, cfg));
      manifest.rows.push_back(ManifestRow{file, scale.name(), id, cfg.tonic_hz});
    }
  }
  write_manifest((std::filesystem::path(out_dir) / "manifest.csv").string(), manifest);
  return manifest;
}

}  // namespace raga
