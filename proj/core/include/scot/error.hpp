#pragma once

#include <stdexcept>
#include <string>

namespace scot {

// Exit-code families used by the CLI: input problems map to 1, numerical or
// training failures map to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& file, long line, const std::string& what)
      : InputError(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  long line() const noexcept { return line_; }

 private:
  std::string file_;
  long line_;
};

class NotFoundError : public InputError {
 public:
  using InputError::InputError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Thrown by the scaling-mode Sinkhorn solver when the Gibbs kernel underflows.
class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TrainingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace scot
