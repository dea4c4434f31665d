// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dse {

// Exit-code contract used by the CLI: config errors map to 1, data errors
// to 2, anything else to 3.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Carries every violation found while validating a config, not just the first.
class ConfigInvalid : public ConfigError {
public:
  explicit ConfigInvalid(std::vector<std::string> violations)
      : ConfigError(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid config";
    for (const auto& s : v) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

class ParseError : public DataError {
public:
  using DataError::DataError;
};

class DuplicateFrameId : public DataError {
public:
  using DataError::DataError;
};

class UnknownLabel : public DataError {
public:
  using DataError::DataError;
};

// A label survived query filtering but has no canonical group; that is a
// configuration problem, not a data problem.
class UnmappedLabel : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class UnknownSourceClass : public DataError {
public:
  using DataError::DataError;
};

class SchemeMismatch : public DataError {
public:
  using DataError::DataError;
};

class BadRatios : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class MissingMetric : public DataError {
public:
  using DataError::DataError;
};

class ZeroBaseline : public DataError {
public:
  using DataError::DataError;
};

class SourceUnreachable : public DataError {
public:
  using DataError::DataError;
};

class InfeasiblePlacement : public DataError {
public:
  using DataError::DataError;
};

}  // namespace dse
