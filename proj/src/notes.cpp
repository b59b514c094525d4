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

#include "raga/notes.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "raga/errors.hpp"

namespace raga {
namespace {

constexpr std::array<std::pair<std::string_view, int>, 17> kSwaras{{
    {"S", 0},   {"R1", 1},  {"R2", 2}, {"G1", 2},  {"R3", 3},  {"G2", 3},
    {"G3", 4},  {"M1", 5},  {"M2", 6}, {"P", 7},   {"D1", 8},  {"D2", 9},
    {"N1", 9},  {"D3", 10}, {"N2", 10}, {"N3", 11}, {"S'", 12},
}};

constexpr std::array<std::string_view, 12> kPitchNames{
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<Swara> to_swaras(const std::vector<std::string>& names) {
  std::vector<Swara> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(Swara{n, swara_semitones(n)});
  return out;
}

std::string join(const std::vector<Swara>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ' ';
    out += s.name;
  }
  return out;
}

}  // namespace

NoteIndex::NoteIndex(int midi_number) : midi(midi_number) {
  if (midi_number < 0 || midi_number > 127) {
    throw RangeError("MIDI note " + std::to_string(midi_number) + " outside [0, 127]");
  }
}

double note_frequency_unchecked(int midi, double tuning_a4) {
  return tuning_a4 * std::exp2((midi - 69) / 12.0);
}

double note_frequency(NoteIndex n, double tuning_a4) {
  return note_frequency_unchecked(n.midi, tuning_a4);
}

NearestNote nearest_note(double freq_hz, double tuning_a4) {
  if (!(freq_hz > 0.0)) throw RangeError("frequency must be positive");
  const double x = 69.0 + 12.0 * std::log2(freq_hz / tuning_a4);
  const double lower = std::floor(x);
  const double frac = x - lower;
  // Midpoints (to within rounding of the log) go down.
  const bool up = frac > 0.5 && std::abs(frac - 0.5) > 1e-9;
  const double midi = up ? lower + 1.0 : lower;
  return NearestNote{NoteIndex(static_cast<int>(midi)), (x - midi) * 100.0};
}

std::string note_name(NoteIndex n) {
  return std::string(kPitchNames[static_cast<std::size_t>(n.midi % 12)]) + std::to_string(n.midi / 12 - 1);
}

NoteIndex parse_note(std::string_view name) {
  name = strip(name);
  if (name.empty()) throw LookupError("empty note name");
  static constexpr std::array<int, 7> kLetter{9, 11, 0, 2, 4, 5, 7};  // A..G
  const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  if (letter < 'A' || letter > 'G') throw LookupError("bad note name: " + std::string(name));
  int pc = kLetter[static_cast<std::size_t>(letter - 'A')];
  std::size_t i = 1;
  if (i < name.size() && name[i] == '#') {
    ++pc;
    ++i;
  } else if (i < name.size() && name[i] == 'b') {
    --pc;
    ++i;
  }
  const std::string_view rest = name.substr(i);
  int octave = 0;
  try {
    std::size_t used = 0;
    octave = std::stoi(std::string(rest), &used);
    if (used != rest.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw LookupError("bad note name: " + std::string(name));
  }
  return NoteIndex(12 * (octave + 1) + pc);
}

int swara_semitones(std::string_view swara) {
  swara = strip(swara);
  if (swara == "\xE1\xB9\xA0") return 12;  // U+1E60, S with dot above
  for (const auto& [name, semis] : kSwaras) {
    if (name == swara) return semis;
  }
  throw LookupError("unknown swara: " + std::string(swara));
}

double swara_ratio(std::string_view swara) { return std::exp2(swara_semitones(swara) / 12.0); }

double Swara::ratio() const { return std::exp2(semitones / 12.0); }

ScaleSpec ScaleSpec::make(std::string name, const std::vector<std::string>& arohanam,
                          const std::vector<std::string>& avarohanam, bool twisted) {
  if (name.empty()) throw DataError("scale name is empty");
  ScaleSpec s;
  s.name_ = std::move(name);
  s.arohanam_ = to_swaras(arohanam);
  s.avarohanam_ = to_swaras(avarohanam);
  s.twisted_ = twisted;
  for (const auto* dir : {&s.arohanam_, &s.avarohanam_}) {
    if (dir->size() < 4 || dir->size() > 8) {
      throw DataError(s.name_ + ": each direction needs 4 to 8 swaras, got " + std::to_string(dir->size()));
    }
  }
  if (!twisted) {
    for (std::size_t i = 1; i < s.arohanam_.size(); ++i) {
      if (s.arohanam_[i].semitones <= s.arohanam_[i - 1].semitones) {
        throw DataError(s.name_ + ": arohanam is not strictly ascending at " + s.arohanam_[i].name);
      }
    }
    for (std::size_t i = 1; i < s.avarohanam_.size(); ++i) {
      if (s.avarohanam_[i].semitones >= s.avarohanam_[i - 1].semitones) {
        throw DataError(s.name_ + ": avarohanam is not strictly descending at " + s.avarohanam_[i].name);
      }
    }
  }
  return s;
}

std::vector<double> ScaleSpec::arohanam_ratios() const {
  std::vector<double> out;
  for (const auto& s : arohanam_) out.push_back(s.ratio());
  return out;
}

std::vector<double> ScaleSpec::avarohanam_ratios() const {
  std::vector<double> out;
  for (const auto& s : avarohanam_) out.push_back(s.ratio());
  return out;
}

std::string ScaleSpec::to_line() const {
  std::string line = name_ + "," + join(arohanam_) + ";" + join(avarohanam_);
  if (twisted_) line += ",twisted";
  return line;
}

std::vector<ScaleSpec> parse_scale_file(std::string_view text) {
  std::vector<ScaleSpec> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = strip(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = "scale file line " + std::to_string(lineno) + ": ";
    const auto c1 = line.find(',');
    if (c1 == std::string_view::npos) throw FormatError(where + "expected name,arohanam;avarohanam");
    const std::string name(strip(line.substr(0, c1)));
    std::string_view body = line.substr(c1 + 1);
    bool twisted = false;
    if (const auto c2 = body.find(','); c2 != std::string_view::npos) {
      const auto flag = strip(body.substr(c2 + 1));
      if (flag != "twisted") throw FormatError(where + "unknown flag '" + std::string(flag) + "'");
      twisted = true;
      body = body.substr(0, c2);
    }
    const auto semi = body.find(';');
    if (semi == std::string_view::npos) throw FormatError(where + "missing ';' between arohanam and avarohanam");
    try {
      out.push_back(ScaleSpec::make(name, split_words(body.substr(0, semi)), split_words(body.substr(semi + 1)),
                                    twisted));
    } catch (const DataError& e) {
      throw FormatError(where + e.what());
    }
    if (!seen.insert(name).second) throw FormatError(where + "duplicate raga " + name);
  }
  return out;
}

std::vector<ScaleSpec> read_scale_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scale file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scale_file(ss.str());
}

LabelMap::LabelMap(std::vector<std::string> names) : names_(std::move(names)) {
  std::sort(names_.begin(), names_.end());
  names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
}

int LabelMap::id(std::string_view name) const {
  const auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it == names_.end() || *it != name) throw LookupError("unknown raga: " + std::string(name));
  return static_cast<int>(it - names_.begin());
}

const std::string& LabelMap::name(int id) const {
  if (id < 0 || id >= size()) throw LookupError("label id out of range: " + std::to_string(id));
  return names_[static_cast<std::size_t>(id)];
}

}  // namespace raga
