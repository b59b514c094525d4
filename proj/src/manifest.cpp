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

#include "raga/manifest.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "raga/errors.hpp"

namespace raga {
namespace {

constexpr const char* kHeader = "path,raga,recording_id,tonic_hz";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

LabelMap Manifest::labels() const {
  std::vector<std::string> names;
  for (const auto& r : rows) names.push_back(r.raga);
  return LabelMap(std::move(names));
}

std::string Manifest::resolve(const ManifestRow& row) const {
  const std::filesystem::path p(row.path);
  return p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
}

void Manifest::validate(bool check_paths) const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto where = "manifest row " + std::to_string(i + 1) + ": ";
    if (r.path.empty()) throw DataError(where + "empty path");
    if (r.raga.empty()) throw DataError(where + "empty raga name");
    if (r.recording_id.empty()) throw DataError(where + "empty recording id");
    if (check_paths && !std::filesystem::exists(resolve(r))) throw DataError(where + "missing file " + resolve(r));
  }
}

Manifest parse_manifest(const std::string& text, const std::string& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kHeader) throw FormatError(std::string("manifest header must be '") + kHeader + "'");
      header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 4) throw FormatError("manifest line " + std::to_string(lineno) + ": expected 4 fields");
    ManifestRow row{f[0], f[1], f[2], std::nullopt};
    if (!f[3].empty()) {
      double tonic = 0.0;
      const auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(), tonic);
      if (res.ec != std::errc() || res.ptr != f[3].data() + f[3].size() || !(tonic > 0.0)) {
        throw FormatError("manifest line " + std::to_string(lineno) + ": bad tonic '" + f[3] + "'");
      }
      row.tonic_hz = tonic;
    }
    m.rows.push_back(std::move(row));
  }
  if (!header) throw FormatError("manifest is empty");
  m.validate(false);
  return m;
}

std::string format_manifest(const Manifest& m) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : m.rows) {
    out += r.path + "," + r.raga + "," + r.recording_id + "," + (r.tonic_hz ? shortest(*r.tonic_hz) : "") + "\n";
  }
  return out;
}

Manifest read_manifest(const std::string& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto parent = std::filesystem::path(path).parent_path();
  auto m = parse_manifest(ss.str(), parent.empty() ? "." : parent.string());
  m.validate(check_paths);
  return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path);
  out << format_manifest(m);
}

}  // namespace raga
