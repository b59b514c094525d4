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

#include <string>
#include <string_view>
#include <vector>

namespace raga {

/// A semitone on the MIDI grid (A4 = 69).
struct NoteIndex {
  int midi = 69;

  constexpr NoteIndex() = default;
  explicit NoteIndex(int midi_number);

  NoteIndex operator+(int semitones) const { return NoteIndex(midi + semitones); }
  friend bool operator==(NoteIndex, NoteIndex) = default;
};

inline constexpr double kTuningA4 = 440.0;

/// Lowest bin of the default note filter bank.
inline const NoteIndex kNoteB1{35};

/// Equal-tempered frequency: tuning_a4 * 2^((midi - 69) / 12).
double note_frequency(NoteIndex n, double tuning_a4 = kTuningA4);

/// Same formula without the MIDI range check; used for filter shoulders.
double note_frequency_unchecked(int midi, double tuning_a4 = kTuningA4);

struct NearestNote {
  NoteIndex note;
  /// Signed offset from `note`. Exact midpoints resolve to the lower note with +50.
  double cents = 0.0;
};

NearestNote nearest_note(double freq_hz, double tuning_a4 = kTuningA4);

/// "C3", "F#6", ... Sharps only.
std::string note_name(NoteIndex n);
/// Parses names produced by note_name; also accepts flats ("Bb2").
NoteIndex parse_note(std::string_view name);

/// Semitones above Sa for one of the 16 swara names (S, R1..R3, G1..G3,
/// M1, M2, P, D1..D3, N1..N3). The upper Sa is spelled "S'" and maps to 12.
int swara_semitones(std::string_view swara);

/// Ratio of a swara to Sa. Enharmonic names (R2/G1, R3/G2, D2/N1, D3/N2) agree.
double swara_ratio(std::string_view swara);

struct Swara {
  std::string name;
  int semitones = 0;

  double ratio() const;
  friend bool operator==(const Swara&, const Swara&) = default;
};

/// A raga's ascending and descending scale. Straight scales must be strictly
/// monotone; scales marked twisted skip that check and are stored verbatim.
class ScaleSpec {
 public:
  static ScaleSpec make(std::string name, const std::vector<std::string>& arohanam,
                        const std::vector<std::string>& avarohanam, bool twisted = false);

  const std::string& name() const { return name_; }
  const std::vector<Swara>& arohanam() const { return arohanam_; }
  const std::vector<Swara>& avarohanam() const { return avarohanam_; }
  bool twisted() const { return twisted_; }

  std::vector<double> arohanam_ratios() const;
  std::vector<double> avarohanam_ratios() const;
  std::size_t note_count() const { return arohanam_.size() + avarohanam_.size(); }

  /// "name,S R2 ...;S' N3 ...[,twisted]"
  std::string to_line() const;

 private:
  std::string name_;
  std::vector<Swara> arohanam_;
  std::vector<Swara> avarohanam_;
  bool twisted_ = false;
};

/// One record per line: `name,arohanam;avarohanam[,twisted]`, swaras
/// space-separated. Blank lines and lines starting with '#' are skipped.
std::vector<ScaleSpec> parse_scale_file(std::string_view text);
std::vector<ScaleSpec> read_scale_file(const std::string& path);

/// Dense raga-name <-> class-id map. Ids follow sorted name order.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  int id(std::string_view name) const;
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

}  // namespace raga
