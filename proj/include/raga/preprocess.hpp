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
#include <vector>

#include "raga/audio_io.hpp"

namespace raga {

struct SegmentationConfig {
  /// Fraction cut from each end of a recording before segmentation.
  double trim_fraction = 0.10;
  double segment_seconds = 30.0;
  int sample_rate = kPipelineSampleRate;

  /// Whole-sample segment length; rounded once here and reused everywhere.
  std::size_t segment_samples() const;
  void validate() const;
};

/// Keeps samples [floor(n*f), n - floor(n*f)). Throws DegenerateClipError when
/// fewer than 10 samples remain.
AudioClip trim(const AudioClip& clip, const SegmentationConfig& cfg);

/// Splits into ceil(n / segment_samples) equal-length segments, zero-padding
/// the last one. An empty clip yields no segments.
std::vector<AudioClip> segment(const AudioClip& clip, const SegmentationConfig& cfg);

/// resample -> trim -> segment.
std::vector<AudioClip> condition(const AudioClip& clip, const SegmentationConfig& cfg);

}  // namespace raga
