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

#include <limits>
#include <set>

#include "doctest.h"
#include "raga/errors.hpp"
#include "raga/featex.hpp"
#include "raga/synth.hpp"
#include "support.hpp"

using namespace raga;

namespace {

ScaleSpec mohanam() {
  return ScaleSpec::make("mohanam", {"S", "R2", "G3", "P", "D2", "S'"}, {"S'", "D2", "P", "G3", "R2", "S"});
}

// Fraction of frames whose feature argmax is within one bin of the note
// nearest to the synthesized pitch somewhere in the central half of the
// frame's window.
double pitch_bin_agreement(const ScaleSpec& scale, const SynthConfig& sc) {
  const FeatureConfig cfg;
  const auto fb = build_filterbank(cfg);
  const auto clip = synth_scale_clip(scale, sc);
  const auto track = synth_pitch_track(scale, sc);
  const auto arg = frame_argmax(extract_features(clip, cfg, fb));
  std::size_t good = 0;
  const std::size_t quarter = static_cast<std::size_t>(cfg.stft.frame_size) / 4;
  for (std::size_t t = 0; t < arg.size(); ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg.stft.hop_size);
    std::set<int> allowed;
    for (std::size_t i = start + quarter; i < start + 3 * quarter; i += 64) {
      const int bin = nearest_note(track[i]).note.midi - fb.anchor.midi;
      allowed.insert({bin - 1, bin, bin + 1});
    }
    good += allowed.count(arg[t]);
  }
  return static_cast<double>(good) / static_cast<double>(arg.size());
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("notes render at tonic times swara ratio") {
    SynthConfig sc;
    sc.tonic_hz = 130.81;
    sc.noise_db = -200.0;
    const auto s = ScaleSpec::make("sgp", {"S", "G3", "P", "S'"}, {"S'", "P", "G3", "S"});
    const auto track = synth_pitch_track(s, sc);
    const std::size_t note = static_cast<std::size_t>(std::llround(sc.note_seconds * sc.sample_rate));
    CHECK(track[note / 2] == doctest::Approx(130.81).epsilon(1e-12));
    CHECK(std::abs(track[2 * note + note / 2] - 196.01) <= 0.02);
    CHECK(std::abs(track[3 * note + note / 2] - 261.62) <= 0.01);
    const auto clip = synth_scale_clip(s, sc);
    CHECK(clip.size() == 8 * note);
  }

  TEST_CASE("clip duration is note_seconds times note count") {
    SynthConfig sc;
    sc.note_seconds = 0.37;
    const auto clip = synth_scale_clip(mohanam(), sc);
    CHECK(std::abs(static_cast<double>(clip.size()) - 0.37 * 12 * sc.sample_rate) <= 1.0);
    CHECK(clip.size() == synth_clip_length(mohanam(), sc));
    sc.clip_seconds = 5.0;
    CHECK(synth_scale_clip(mohanam(), sc).size() == 5 * 22050);
  }

  TEST_CASE("same seed gives identical clips, different seeds differ") {
    SynthConfig sc;
    sc.seed = 42;
    sc.detune_cents = 10.0;
    const auto a = synth_scale_clip(mohanam(), sc);
    CHECK(a.samples == synth_scale_clip(mohanam(), sc).samples);
    sc.seed = 43;
    CHECK(a.samples != synth_scale_clip(mohanam(), sc).samples);
    for (float s : a.samples) REQUIRE(std::abs(s) <= 1.0f);
  }

  TEST_CASE("gamaka trajectories") {
    SynthConfig sc;
    sc.tonic_hz = 200.0;
    sc.note_seconds = 1.0;
    const double base = 200.0 * swara_ratio("G3");

    const auto flat = synth_gamaka(swara_ratio("G3"), Gamaka::none, sc);
    CHECK(std::all_of(flat.begin(), flat.end(), [&](double f) { return f == base; }));

    const auto kam = synth_gamaka(swara_ratio("G3"), Gamaka::kampita, sc);
    const double hi = *std::max_element(kam.begin(), kam.end());
    const double lo = *std::min_element(kam.begin(), kam.end());
    CHECK(hi == doctest::Approx(base * std::pow(2.0, 1.0 / 12.0)).epsilon(1e-7));
    CHECK(lo == doctest::Approx(base * std::pow(2.0, -1.0 / 12.0)).epsilon(1e-7));
    CHECK(hi <= base * std::pow(2.0, 1.0 / 12.0) * (1 + 1e-12));

    const auto jaru = synth_gamaka(swara_ratio("G3"), Gamaka::jaru, sc);
    CHECK(jaru.front() == doctest::Approx(base * std::pow(2.0, -2.0 / 12.0)));
    const auto at30 = static_cast<std::size_t>(0.3 * sc.sample_rate);
    CHECK(std::abs(1200.0 * std::log2(jaru[at30] / base)) <= 1.0);
    // Independent evaluation of the glide: -2 semitones * (1 - t / (0.3 s)).
    const auto at15 = static_cast<std::size_t>(0.15 * sc.sample_rate);
    const double t15 = static_cast<double>(at15) / sc.sample_rate;
    CHECK(jaru[at15] == doctest::Approx(base * std::pow(2.0, -2.0 * (1.0 - t15 / 0.3) / 12.0)).epsilon(1e-3));
    CHECK(jaru.back() == doctest::Approx(base));
    for (std::size_t i = 1; i < at30; ++i) REQUIRE(jaru[i] >= jaru[i - 1]);

    sc.jaru_from_below = false;
    CHECK(synth_gamaka(1.0, Gamaka::jaru, sc).front() == doctest::Approx(200.0 * std::pow(2.0, 2.0 / 12.0)));
  }

  TEST_CASE("gamaka names") {
    for (auto g : {Gamaka::none, Gamaka::kampita, Gamaka::jaru}) CHECK(parse_gamaka(to_string(g)) == g);
    CHECK_THROWS_AS(parse_gamaka("sphuritam"), ConfigError);
  }

  TEST_CASE("pitches outside the filter range are rejected") {
    SynthConfig sc;
    sc.tonic_hz = 1000.0;
    CHECK_THROWS_AS(synth_scale_clip(mohanam(), sc), RangeError);
    sc.tonic_hz = 55.0;
    CHECK_THROWS_AS(synth_scale_clip(mohanam(), sc), RangeError);
    sc.tonic_hz = 60.0;
    sc.gamaka = Gamaka::jaru;
    CHECK_THROWS_AS(synth_scale_clip(mohanam(), sc), RangeError);
  }

  TEST_CASE("feature argmax follows the synthesized pitch") {
    Rng rng(77);
    const auto scales = read_scale_file(std::string(RAGA_TEST_DATA_DIR) + "/desk_scales.txt");
    for (auto g : {Gamaka::none, Gamaka::kampita, Gamaka::jaru}) {
      for (int trial = 0; trial < 4; ++trial) {
        SynthConfig sc;
        sc.gamaka = g;
        sc.seed = rng.next();
        sc.tonic_hz = 100.0 * std::pow(2.0, rng.uniform(0.0, 1.5));
        sc.detune_cents = 15.0;
        sc.noise_db = -20.0;
        const auto& scale = scales[rng.index(scales.size())];
        CAPTURE(to_string(g));
        CAPTURE(scale.name());
        CHECK(pitch_bin_agreement(scale, sc) >= 0.95);
      }
    }
  }

  float min_mean_separation(const std::vector<ScaleSpec>& scales, const SynthConfig& sc) {
    const FeatureConfig cfg;
    const auto fb = build_filterbank(cfg);
    std::vector<Eigen::RowVectorXf> means;
    for (const auto& s : scales) means.push_back(extract_features(synth_scale_clip(s, sc), cfg, fb).values.colwise().mean());
    float worst = std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
      for (std::size_t j = i + 1; j < means.size(); ++j) {
        worst = std::min(worst, (means[i] - means[j]).cwiseAbs().maxCoeff());
      }
    }
    return worst;
  }

  TEST_CASE("scales differing in a swara have distinguishable mean features") {
    const auto scales = read_scale_file(std::string(RAGA_TEST_DATA_DIR) + "/desk_scales.txt");
    SynthConfig clean;
    clean.timbre = Timbre::three_harmonic;
    clean.noise_db = -200.0;
    CHECK(min_mean_separation(scales, clean) >= 1.0f);
    // Plain sines with default noise: pairs that differ by a single semitone
    // step (M1 vs M2 between neighbours G3 and P) separate by about 0.8.
    CHECK(min_mean_separation(scales, SynthConfig{}) >= 0.75f);
  }


  TEST_CASE("dataset layout, tonics and reproducibility") {
    testing::TempDir a("synth_a"), b("synth_b");
    DatasetSpec spec;
    spec.scales = read_scale_file(std::string(RAGA_TEST_DATA_DIR) + "/desk_scales.txt");
    spec.per_class = 40;
    spec.shruti_set = {130.8127826502993, 196.0};
    spec.synth.clip_seconds = 0.5;
    spec.synth.seed = 5;
    const auto m = synth_dataset(spec, a.str());
    CHECK(m.rows.size() == 320);
    std::map<std::string, int> per_class;
    std::map<std::string, std::set<double>> tonics;
    std::set<std::string> recordings;
    for (const auto& r : m.rows) {
      per_class[r.raga] += 1;
      REQUIRE(r.tonic_hz.has_value());
      tonics[r.raga].insert(*r.tonic_hz);
      recordings.insert(r.recording_id);
    }
    CHECK(per_class.size() == 8);
    for (const auto& [name, n] : per_class) CHECK(n == 40);
    for (const auto& [name, t] : tonics) CHECK(t.size() == 2);
    CHECK(recordings.size() == 320);
    CHECK(read_manifest(a.str("manifest.csv")).rows == m.rows);

    synth_dataset(spec, b.str());
    for (const auto& r : m.rows) REQUIRE(testing::read_bytes(a.path() / r.path) == testing::read_bytes(b.path() / r.path));
    CHECK(testing::read_bytes(a.path() / "manifest.csv") == testing::read_bytes(b.path() / "manifest.csv"));

    // Clip i of class c uses seed + c * per_class + i.
    SynthConfig one = spec.synth;
    one.seed = 5 + 2 * 40 + 7;
    one.tonic_hz = spec.shruti_set[7 % 2];
    const auto expected = decode_wav(encode_wav(synth_scale_clip(spec.scales[2], one)));
    const auto& row = m.rows[2 * 40 + 7];
    CHECK(row.raga == spec.scales[2].name());
    CHECK(read_wav_file((a.path() / row.path).string()).samples == expected.samples);
  }

  TEST_CASE("config validation") {
    SynthConfig sc;
    sc.note_seconds = 0.005;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = {};
    sc.amplitude = 1.5;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    DatasetSpec spec;
    CHECK_THROWS_AS(synth_dataset(spec, "/tmp/never"), ConfigError);
  }
}
