#pragma once

#include <stdexcept>
#include <string>

namespace gymcam {

// Exit codes used by the command-line tool. Every typed error maps onto one.
enum class ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kInternal = 3 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Bad input: malformed files, out-of-range parameters, schema mismatches.
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kValidation; }
};

// Input that parses but cannot be processed (degenerate signals, missing models).
class ProcessingError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kRuntime; }
};

class InsufficientDataError : public ProcessingError {
 public:
  using ProcessingError::ProcessingError;
};

class DegenerateError : public ProcessingError {
 public:
  using ProcessingError::ProcessingError;
};

class InternalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInternal; }
};

}  // namespace gymcam
