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

#include "raga/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "raga/errors.hpp"

namespace raga {

std::size_t SegmentationConfig::segment_samples() const {
  return static_cast<std::size_t>(std::llround(segment_seconds * sample_rate));
}

void SegmentationConfig::validate() const {
  if (!(trim_fraction >= 0.0 && 2.0 * trim_fraction < 1.0)) {
    throw ConfigError("trim fraction must lie in [0, 0.5)");
  }
  if (!(segment_seconds > 0.0)) throw ConfigError("segment length must be positive");
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (segment_samples() == 0) throw ConfigError("segment length rounds to zero samples");
}

AudioClip trim(const AudioClip& clip, const SegmentationConfig& cfg) {
  cfg.validate();
  const std::size_t n = clip.size();
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.trim_fraction));
  const std::size_t kept = n - 2 * cut;
  if (kept < 10) {
    throw DegenerateClipError("clip of " + std::to_string(n) + " samples leaves " +
                              std::to_string(kept) + " after trimming");
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(cut),
                     clip.samples.end() - static_cast<std::ptrdiff_t>(cut));
  return out;
}

std::vector<AudioClip> segment(const AudioClip& clip, const SegmentationConfig& cfg) {
  cfg.validate();
  if (clip.sample_rate != cfg.sample_rate) {
    throw ConfigError("clip rate " + std::to_string(clip.sample_rate) + " differs from segmentation rate " +
                      std::to_string(cfg.sample_rate));
  }
  const std::size_t seg = cfg.segment_samples();
  const std::size_t count = (clip.size() + seg - 1) / seg;
  std::vector<AudioClip> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].sample_rate = clip.sample_rate;
    out[i].samples.assign(seg, 0.0f);
    const std::size_t begin = i * seg;
    const std::size_t end = std::min(begin + seg, clip.size());
    std::copy(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              clip.samples.begin() + static_cast<std::ptrdiff_t>(end), out[i].samples.begin());
  }
  return out;
}

std::vector<AudioClip> condition(const AudioClip& clip, const SegmentationConfig& cfg) {
  return segment(trim(resample(clip, cfg.sample_rate), cfg), cfg);
}

}  // namespace raga
