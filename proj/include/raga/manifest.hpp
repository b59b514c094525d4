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

#include <optional>
#include <string>
#include <vector>

#include "raga/notes.hpp"

namespace raga {

struct ManifestRow {
  /// Audio (.wav) or feature (.rgfb) file; relative paths resolve against
  /// the manifest's directory.
  std::string path;
  std::string raga;
  std::string recording_id;
  std::optional<double> tonic_hz;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// CSV with header `path,raga,recording_id,tonic_hz`.
struct Manifest {
  std::vector<ManifestRow> rows;
  /// Directory relative paths are resolved against.
  std::string base_dir = ".";

  LabelMap labels() const;
  std::string resolve(const ManifestRow& row) const;
  /// Throws DataError on empty raga or recording id; with check_paths, also
  /// when a file is missing.
  void validate(bool check_paths) const;
};

Manifest parse_manifest(const std::string& text, const std::string& base_dir = ".");
std::string format_manifest(const Manifest& m);
Manifest read_manifest(const std::string& path, bool check_paths = true);
void write_manifest(const std::string& path, const Manifest& m);

}  // namespace raga
