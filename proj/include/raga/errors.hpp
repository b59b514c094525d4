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

#include <stdexcept>
#include <string>

namespace raga {

// Error hierarchy. The CLI maps each family to a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data problems: malformed files, bad manifests, out-of-range audio.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedFormatError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateClipError : public DataError {
 public:
  using DataError::DataError;
};

class TooShortError : public DataError {
 public:
  using DataError::DataError;
};

class LookupError : public DataError {
 public:
  using DataError::DataError;
};

class SplitError : public DataError {
 public:
  using DataError::DataError;
};

// Configuration problems: impossible filter banks, bad hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ResolutionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class StateError : public Error {
 public:
  using Error::Error;
};

// Non-finite values inside the network.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace raga
