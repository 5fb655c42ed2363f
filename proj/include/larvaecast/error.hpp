#pragma once

#include <stdexcept>
#include <string>

namespace larvaecast {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kConfiguration = 2,
  kData = 3,
  kInternal = 4,
};

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept = 0;
  virtual const char* kind() const noexcept = 0;
};

/// Invalid hyperparameters, architecture or command options.
class ConfigError : public Error {
public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfiguration; }
  const char* kind() const noexcept override { return "configuration"; }
};

/// Input data that cannot be used: too short, missing, out of range.
class DataError : public Error {
public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
  const char* kind() const noexcept override { return "data"; }
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public DataError {
public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "domain"; }
};

/// Malformed document or CSV. Messages carry line/field context.
class ParseError : public DataError {
public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "parse"; }
};

/// Mismatched dimensions between tensors, caches or windows.
class ShapeError : public Error {
public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInternal; }
  const char* kind() const noexcept override { return "shape"; }
};

/// A pipeline invariant that should hold by construction did not.
class InvariantError : public Error {
public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInternal; }
  const char* kind() const noexcept override { return "invariant"; }
};

}  // namespace larvaecast
