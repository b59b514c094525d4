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
#include <string>
#include <vector>

#include "raga/audio_io.hpp"
#include "raga/manifest.hpp"
#include "raga/notes.hpp"

namespace raga {

/// Pitch ornaments that can be rendered. The other five gamakas (jantai,
/// khandippu, odukkal, orikai, sphuritam) are not modeled.
enum class Gamaka { none, kampita, jaru };

enum class Timbre { sine, three_harmonic };

Gamaka parse_gamaka(const std::string& name);
std::string to_string(Gamaka g);

struct SynthConfig {
  /// Sa frequency (the shruti). Defaults to C3.
  double tonic_hz = 130.8127826502993;
  double note_seconds = 0.5;
  /// When positive, note_seconds is replaced by clip_seconds / note_count.
  double clip_seconds = 0.0;
  Gamaka gamaka = Gamaka::none;
  /// White-noise level relative to the signal RMS; <= -120 disables noise.
  double noise_db = -30.0;
  std::uint64_t seed = 0;
  int sample_rate = kPipelineSampleRate;
  double amplitude = 0.5;
  Timbre timbre = Timbre::sine;
  double crossfade_seconds = 0.010;

  double kampita_rate_hz = 6.0;
  double kampita_depth_semitones = 1.0;
  double jaru_semitones = 2.0;
  bool jaru_from_below = true;
  double jaru_fraction = 0.30;

  /// Per-clip tonic drift drawn uniformly from [-detune_cents, detune_cents].
  double detune_cents = 0.0;

  /// Playable pitch range; defaults to the shoulders of the default
  /// 56-bin filter bank (A#1 .. G6).
  double min_pitch_hz = 58.27047018976124;
  double max_pitch_hz = 1567.981743926997;

  void validate() const;
};

/// Instantaneous frequency (Hz, one value per sample) of one note of
/// `tonic_hz * base_ratio` lasting `note_seconds`.
///   none    constant
///   kampita base * 2^(depth * sin(2 pi rate t) / 12)
///   jaru    glide linear in log-frequency from +-jaru_semitones to base over
///           the first jaru_fraction of the note, then constant
std::vector<double> synth_gamaka(double base_ratio, Gamaka mode, const SynthConfig& cfg);

/// Largest pitch excursion (semitones) a gamaka mode adds around its note.
double gamaka_excursion(Gamaka mode, const SynthConfig& cfg);

/// Arohanam then avarohanam, note_seconds per swara, raised-cosine
/// cross-fades between notes, white noise at noise_db. Deterministic in seed.
AudioClip synth_scale_clip(const ScaleSpec& scale, const SynthConfig& cfg);

/// Number of samples synth_scale_clip produces.
std::size_t synth_clip_length(const ScaleSpec& scale, const SynthConfig& cfg);

/// Intended (pre-noise) instantaneous pitch of every sample of a clip.
std::vector<double> synth_pitch_track(const ScaleSpec& scale, const SynthConfig& cfg);

struct DatasetSpec {
  std::vector<ScaleSpec> scales;
  int per_class = 1;
  std::vector<double> shruti_set{130.8127826502993};
  SynthConfig synth;
};

/// Writes per_class clips for every scale into out_dir plus manifest.csv.
/// Clip i of class c uses tonic shruti_set[i % n] and seed synth.seed +
/// c * per_class + i; each clip is its own recording.
Manifest synth_dataset(const DatasetSpec& spec, const std::string& out_dir);

}  // namespace raga
