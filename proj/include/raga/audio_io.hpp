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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace raga {

/// Sample rate every clip is converted to before segmentation.
inline constexpr int kPipelineSampleRate = 22050;

/// Mono audio at a fixed sample rate. Samples are finite and lie in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kPipelineSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Throws ConfigError/DataError if the clip breaks the AudioClip invariants.
void validate(const AudioClip& clip);

struct DecodeStats {
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  /// Samples hard-clipped to [-1, 1] after mixdown.
  std::size_t clipped_samples = 0;
};

/// Decodes a RIFF/WAVE container holding PCM16 or FLOAT32 audio with one or
/// two channels. Channels are averaged to mono; PCM16 is scaled by 1/32768.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);
AudioClip decode_wav(std::span<const std::uint8_t> bytes, DecodeStats& stats);

/// 16-bit PCM mono WAV.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);

AudioClip read_wav_file(const std::string& path);
void write_wav_file(const std::string& path, const AudioClip& clip);

struct ResamplerConfig {
  int taps_per_phase = 64;
  double kaiser_beta = 8.0;
  /// Fraction of the lower Nyquist frequency kept in the passband.
  double rolloff = 0.95;
};

/// Polyphase windowed-sinc (Kaiser) sample-rate conversion. The output holds
/// round(len * target / source) samples; same-rate input is returned as is.
AudioClip resample(const AudioClip& clip, int target_rate,
                   const ResamplerConfig& cfg = {});

}  // namespace raga
