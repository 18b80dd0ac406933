#pragma once

#include <stdexcept>
#include <string>

namespace rep {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or index mismatch between operands.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Non-finite or otherwise invalid numeric input.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration (empty grid, out-of-range rate, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed input file. Carries a 1-based line number when known (0 otherwise).
class FormatError : public Error {
public:
  FormatError(const std::string& msg, long line = 0) : Error(format(msg, line)), line_(line) {}
  long line() const { return line_; }

private:
  static std::string format(const std::string& msg, long line) {
    if (line <= 0) return msg;
    return msg + " (line " + std::to_string(line) + ")";
  }
  long line_;
};

/// A metric is undefined for the given inputs (e.g. single-class AUC).
class MetricError : public Error {
public:
  using Error::Error;
};

/// Too few observations to pin down a factor row or latent vector.
class UnidentifiableError : public Error {
public:
  using Error::Error;
};

/// I/O failure (unreadable or unwritable path).
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace rep
