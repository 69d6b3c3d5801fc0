#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace trustpath {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid physical/economic input (zero distance, unreachable link, wrong device kind, bad path).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed collaboration log or record. `location()` is a 1-based line number for
/// text ingestion and a 0-based record index for in-memory ingestion.
class IngestError : public Error {
 public:
  IngestError(std::size_t location, const std::string& what)
      : Error(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

/// Inconsistent model dimensions, unknown devices, or divergence during training.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// The exhaustive oracle refuses instances beyond its node bound.
class OracleBoundError : public Error {
 public:
  using Error::Error;
};

/// Pipeline failure tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool input_error = false)
      : Error(stage + ": " + what), stage_(std::move(stage)), input_error_(input_error) {}
  const std::string& stage() const noexcept { return stage_; }
  /// True when the underlying cause was bad configuration or input data.
  bool input_error() const noexcept { return input_error_; }

 private:
  std::string stage_;
  bool input_error_{};
};

}  // namespace trustpath
