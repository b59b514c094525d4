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

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "raga/audio_io.hpp"
#include "raga/errors.hpp"
#include "raga/notes.hpp"
#include "raga/preprocess.hpp"

namespace raga {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StftConfig {
  int frame_size = 8192;
  int hop_size = 512;
  int sample_rate = kPipelineSampleRate;

  int num_spectrum_bins() const { return frame_size / 2 + 1; }
  double bin_hz() const { return static_cast<double>(sample_rate) / frame_size; }
  /// floor((len - frame) / hop) + 1, or 0 when len < frame.
  std::size_t num_frames(std::size_t len) const;
  void validate() const;
};

struct FilterBankConfig {
  int num_bins = 56;
  NoteIndex anchor = kNoteB1;
  double tuning_a4 = kTuningA4;
};

/// Everything that determines a feature file's contents. Its hash is stored
/// in every feature file so features from different settings never mix.
struct FeatureConfig {
  SegmentationConfig segmentation;
  StftConfig stft;
  FilterBankConfig bank;
  double log_floor = 1e-10;

  void validate() const;
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Triangular weight with zeros at `left` and `right` and 1.0 at `apex`.
inline double triangle_weight(double f, double left, double apex, double right) {
  if (f <= left || f >= right) return 0.0;
  if (f <= apex) return (f - left) / (apex - left);
  return (right - f) / (right - apex);
}

template <typename Scalar>
struct FilterBank {
  /// [num_bins x (frame_size / 2 + 1)]
  RowMatrix<Scalar> weights;
  std::vector<double> center_freqs;
  std::vector<double> left_freqs;
  std::vector<double> right_freqs;
  /// Spectrum bin carrying each filter's apex.
  std::vector<int> apex_bins;
  NoteIndex anchor = kNoteB1;

  int num_bins() const { return static_cast<int>(weights.rows()); }
};

namespace detail {
inline std::vector<double> periodic_hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}
}  // namespace detail

/// Hann-windowed |DFT|^2 per frame: [frames x (frame_size / 2 + 1)].
/// Frame t covers samples [t * hop, t * hop + frame_size).
template <typename Scalar = double>
RowMatrix<Scalar> stft_power(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  if (clip.sample_rate != cfg.sample_rate) {
    throw ConfigError("clip rate " + std::to_string(clip.sample_rate) + " differs from STFT rate " +
                      std::to_string(cfg.sample_rate));
  }
  if (clip.size() < static_cast<std::size_t>(cfg.frame_size)) {
    throw TooShortError("clip of " + std::to_string(clip.size()) + " samples is shorter than one " +
                        std::to_string(cfg.frame_size) + "-sample frame");
  }
  const std::size_t frames = cfg.num_frames(clip.size());
  const int n = cfg.frame_size;
  const int bins = cfg.num_spectrum_bins();
  const auto window = detail::periodic_hann(n);

  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  std::vector<Scalar> frame(static_cast<std::size_t>(n));
  std::vector<std::complex<Scalar>> spectrum;

  RowMatrix<Scalar> power(static_cast<Eigen::Index>(frames), bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg.hop_size);
    for (int i = 0; i < n; ++i) {
      frame[static_cast<std::size_t>(i)] =
          static_cast<Scalar>(clip.samples[start + static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)]);
    }
    fft.fwd(spectrum, frame);
    for (int b = 0; b < bins; ++b) power(static_cast<Eigen::Index>(t), b) = std::norm(spectrum[static_cast<std::size_t>(b)]);
  }
  return power;
}

/// Note-anchored triangular filters on the linear frequency axis. Filter k
/// rises from note (anchor + k - 1), peaks at the spectrum bin nearest note
/// (anchor + k), and falls to zero at note (anchor + k + 1).
template <typename Scalar = double>
FilterBank<Scalar> build_filterbank(int num_bins, NoteIndex anchor, const StftConfig& cfg,
                                    double tuning_a4 = kTuningA4) {
  cfg.validate();
  if (num_bins <= 0) throw ConfigError("filter bank needs at least one bin");
  const double nyquist = cfg.sample_rate / 2.0;
  const double bin_hz = cfg.bin_hz();
  const int spectrum_bins = cfg.num_spectrum_bins();

  FilterBank<Scalar> fb;
  fb.anchor = anchor;
  fb.weights = RowMatrix<Scalar>::Zero(num_bins, spectrum_bins);
  for (int k = 0; k < num_bins; ++k) {
    const int midi = anchor.midi + k;
    const double left = note_frequency_unchecked(midi - 1, tuning_a4);
    const double center = note_frequency_unchecked(midi, tuning_a4);
    const double right = note_frequency_unchecked(midi + 1, tuning_a4);
    if (right >= nyquist) {
      throw RangeError("filter bin " + std::to_string(k) + " (upper shoulder " + std::to_string(right) +
                       " Hz) is not below Nyquist " + std::to_string(nyquist) + " Hz");
    }
    const int apex = static_cast<int>(std::lround(center / bin_hz));
    const double apex_hz = apex * bin_hz;
    if (!(apex_hz > left && apex_hz < right)) {
      throw ResolutionError("filter bin " + std::to_string(k) + " centered at " + std::to_string(center) +
                            " Hz contains no spectrum bin at " + std::to_string(bin_hz) + " Hz spacing");
    }
    const int lo = static_cast<int>(std::floor(left / bin_hz)) + 1;
    const int hi = std::min(spectrum_bins - 1, static_cast<int>(std::ceil(right / bin_hz)) - 1);
    for (int b = std::max(lo, 0); b <= hi; ++b) {
      fb.weights(k, b) = static_cast<Scalar>(triangle_weight(b * bin_hz, left, apex_hz, right));
    }
    fb.weights(k, apex) = Scalar(1);
    fb.center_freqs.push_back(center);
    fb.left_freqs.push_back(left);
    fb.right_freqs.push_back(right);
    fb.apex_bins.push_back(apex);
  }
  return fb;
}

/// ln(power * weights^T + floor), one row per frame.
template <typename Scalar>
RowMatrix<Scalar> apply_filterbank(const RowMatrix<Scalar>& power, const FilterBank<Scalar>& fb,
                                   double log_floor = 1e-10) {
  if (power.cols() != fb.weights.cols()) {
    throw DimensionError("spectrum has " + std::to_string(power.cols()) + " columns, filter bank expects " +
                         std::to_string(fb.weights.cols()));
  }
  RowMatrix<Scalar> energies = power * fb.weights.transpose();
  return (energies.array() + static_cast<Scalar>(log_floor)).log().matrix();
}

/// Log filter-bank energies for one clip, stored as 32-bit floats.
struct FeatureMatrix {
  RowMatrix<float> values;
  std::string clip_id;
  std::uint64_t config_hash = 0;

  Eigen::Index num_frames() const { return values.rows(); }
  Eigen::Index num_bins() const { return values.cols(); }
};

FilterBank<double> build_filterbank(const FeatureConfig& cfg);

FeatureMatrix extract_features(const AudioClip& clip, const FeatureConfig& cfg, const FilterBank<double>& fb);

/// Per-frame index of the largest feature (lowest index on ties).
std::vector<int> frame_argmax(const FeatureMatrix& fm);

/// Little-endian: "RGFB", version u32, frames u32, bins u32, config hash
/// (8 bytes), then frames * bins float32 row-major.
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
std::vector<std::uint8_t> write_features(const FeatureMatrix& fm);
FeatureMatrix read_features(std::span<const std::uint8_t> bytes);

void write_feature_file(const std::string& path, const FeatureMatrix& fm);
FeatureMatrix read_feature_file(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace raga
