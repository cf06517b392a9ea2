#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace filmnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. λ ≤ 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Oscillator parameters that make the closed form complex-valued.
class ValidityError : public Error {
 public:
  using Error::Error;
};

/// More items requested than a population holds.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Array lengths, grids or architectures that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input spectrum does not cover the requested wavelength window.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered during training or evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace filmnet
