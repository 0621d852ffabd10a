#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hnsynth {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  Ok = 0,
  Usage = 2,
  Io = 3,
  Format = 4,
  Invariant = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Precondition or invariant violated by a caller-supplied value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Invariant; }
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Io; }
};

class FileNotFound : public IoError {
 public:
  explicit FileNotFound(const std::string& path) : IoError("no such file: " + path) {}
};

// Malformed input data. `line()` is 1-based, 0 when not applicable.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0);
  ExitCode exit_code() const noexcept override { return ExitCode::Format; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MalformedHeader : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedCodec : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFile : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace hnsynth
