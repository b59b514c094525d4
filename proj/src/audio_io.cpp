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

#include "raga/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "raga/errors.hpp"

namespace raga {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

std::string describe_encoding(std::uint16_t tag, std::uint16_t bits) {
  std::string name;
  switch (tag) {
    case kFormatPcm: name = "PCM"; break;
    case kFormatFloat: name = "IEEE float"; break;
    case 0x0002: name = "MS ADPCM"; break;
    case 0x0006: name = "A-law"; break;
    case 0x0007: name = "mu-law"; break;
    case 0x0011: name = "IMA ADPCM"; break;
    case 0x0055: name = "MP3"; break;
    default: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "format tag 0x%04X", tag);
      name = buf;
    }
  }
  return std::to_string(bits) + "-bit " + name;
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace

void validate(const AudioClip& clip) {
  if (clip.sample_rate <= 0) {
    throw ConfigError("sample rate must be positive, got " + std::to_string(clip.sample_rate));
  }
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const float s = clip.samples[i];
    if (!std::isfinite(s) || std::abs(s) > 1.0f) {
      throw DataError("sample " + std::to_string(i) + " is outside [-1, 1]");
    }
  }
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  DecodeStats stats;
  return decode_wav(bytes, stats);
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes, DecodeStats& stats) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw FormatError("not a RIFF/WAVE container");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw FormatError("chunk extends past end of file");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw FormatError("fmt chunk too short");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      block_align = read_u16(bytes, body + 12);
      bits = read_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError("extensible fmt chunk too short");
        // The first two bytes of the subformat GUID carry the format tag.
        format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw FormatError("missing fmt chunk");
  if (!have_data) throw FormatError("missing data chunk");
  if (rate == 0) throw FormatError("sample rate is zero");
  if (channels == 0) throw FormatError("channel count is zero");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw UnsupportedFormatError("unsupported WAV encoding: " + describe_encoding(format, bits));
  }
  if (channels > 2) {
    throw UnsupportedFormatError("unsupported WAV channel count: " + std::to_string(channels));
  }
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  if (block_align != frame_bytes) throw FormatError("block align does not match format");
  if (data.size() % frame_bytes != 0) throw FormatError("data chunk is not a whole number of frames");

  stats = DecodeStats{channels, bits, float32, 0};
  const std::size_t frames = data.size() / frame_bytes;
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  const std::size_t sample_bytes = bits / 8;
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = f * frame_bytes + c * sample_bytes;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(data, at)) / 32768.0;
      } else {
        const std::uint32_t raw = read_u32(data, at);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        if (!std::isfinite(v)) throw FormatError("non-finite float sample at frame " + std::to_string(f));
        acc += v;
      }
    }
    acc /= channels;
    if (acc > 1.0 || acc < -1.0) {
      acc = std::clamp(acc, -1.0, 1.0);
      ++stats.clipped_samples;
    }
    clip.samples[f] = static_cast<float>(acc);
  }
  return clip;
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  validate(clip);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : clip.samples) {
    const long q = std::lround(static_cast<double>(s) * 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
  }
  return out;
}

AudioClip read_wav_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const DataError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_wav_file(const std::string& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample(const AudioClip& clip, int target_rate, const ResamplerConfig& cfg) {
  if (target_rate <= 0) throw ConfigError("target rate must be positive");
  if (clip.sample_rate <= 0) throw ConfigError("source rate must be positive");
  if (clip.sample_rate == target_rate) return clip;
  if (cfg.taps_per_phase < 2 || cfg.taps_per_phase % 2 != 0) {
    throw ConfigError("taps per phase must be an even number >= 2");
  }

  const std::int64_t g = std::gcd(clip.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;
  const std::int64_t down = clip.sample_rate / g;
  const auto in_len = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t out_len = (in_len * target_rate + clip.sample_rate / 2) / clip.sample_rate;

  const int taps = cfg.taps_per_phase;
  const int half = taps / 2;
  const double cutoff = cfg.rolloff * std::min(1.0, static_cast<double>(up) / down);
  const double i0_beta = bessel_i0(cfg.kaiser_beta);

  // Taps for fractional offset `frac` = phase / up, applied to x[base - half + 1 + j].
  auto make_phase = [&](std::int64_t phase, double* h) {
    const double frac = static_cast<double>(phase) / up;
    double sum = 0.0;
    for (int j = 0; j < taps; ++j) {
      const double d = (j - half + 1) - frac;
      const double u = d / half;
      const double window = std::abs(u) >= 1.0 ? 0.0 : bessel_i0(cfg.kaiser_beta * std::sqrt(1.0 - u * u)) / i0_beta;
      const double arg = M_PI * cutoff * d;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      h[j] = cutoff * sinc * window;
      sum += h[j];
    }
    for (int j = 0; j < taps; ++j) h[j] /= sum;
  };

  const bool tabulate = up <= 4096;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (std::int64_t p = 0; p < up; ++p) make_phase(p, table.data() + p * taps);
  }
  std::vector<double> scratch(static_cast<std::size_t>(taps));

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));
  for (std::int64_t n = 0; n < out_len; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    const double* h = nullptr;
    if (tabulate) {
      h = table.data() + phase * taps;
    } else {
      make_phase(phase, scratch.data());
      h = scratch.data();
    }
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      const std::int64_t idx = base - half + 1 + j;
      if (idx >= 0 && idx < in_len) acc += h[j] * clip.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(n)] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return out;
}

}  // namespace raga
