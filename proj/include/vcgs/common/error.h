#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vcgs {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kDataFormat = 3,
  kInvariant = 4,
  kDiverged = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ExitCode::kUsage, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

/// Malformed or truncated binary/text input. Carries the byte offset at which
/// decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(ExitCode::kDataFormat,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what)
      : Error(ExitCode::kInvariant, what) {}
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(const std::string& what)
      : Error(ExitCode::kDiverged, what) {}
};

// Domain errors. All are contract violations on inputs.
class InvalidRotation : public InvariantError {
 public:
  using InvariantError::InvariantError;
};
class EmptyTarget : public InvariantError {
 public:
  using InvariantError::InvariantError;
};
class EmptyCloud : public InvariantError {
 public:
  using InvariantError::InvariantError;
};
class SizeError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};
class ShapeError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};
class OracleUnsupported : public InvariantError {
 public:
  using InvariantError::InvariantError;
};
class SplitImpossible : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace vcgs
