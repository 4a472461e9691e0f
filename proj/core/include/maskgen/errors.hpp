#pragma once

#include <stdexcept>
#include <string>

namespace maskgen {

// Broad classes of failure. The command line tool maps these onto exit codes.
enum class ErrorKind {
  kUsage,
  kShape,
  kState,
  kData,
  kPrerequisite,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::kShape, what) {}
};

// Operation called in the wrong lifecycle state (e.g. backward without forward).
class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(ErrorKind::kState, what) {}
};

// Loss over a target set in which every position was ignored.
class EmptyLossError : public Error {
 public:
  explicit EmptyLossError(const std::string& what) : Error(ErrorKind::kState, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

// Unrecognized magic number or version in a binary file.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedFileError : public DataError {
 public:
  using DataError::DataError;
};

// Stored dimension disagrees with the configured one.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// A sequence needs more position slots than the model has.
class PositionOverflowError : public DataError {
 public:
  using DataError::DataError;
};

class PrerequisiteError : public Error {
 public:
  explicit PrerequisiteError(const std::string& what)
      : Error(ErrorKind::kPrerequisite, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

}  // namespace maskgen
