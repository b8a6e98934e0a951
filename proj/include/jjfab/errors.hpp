#pragma once

#include <stdexcept>
#include <string>

namespace jjfab {

/// Base for every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class ShadowedPointError : public Error {
 public:
  explicit ShadowedPointError(const std::string& m) : Error("shadowed", m) {}
};

class ZeroAreaError : public Error {
 public:
  explicit ZeroAreaError(const std::string& m) : Error("zero_area", m) {}
};

class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& m) : Error("calibration", m) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& m) : Error("fit", m) {}
};

class OptimizationError : public Error {
 public:
  explicit OptimizationError(const std::string& m) : Error("optimization", m) {}
};

/// Parse failures carry a 1-based line and, when known, the column name.
class ParseError : public Error {
 public:
  ParseError(const std::string& m, std::size_t line, std::string column = {})
      : Error("parse", format(m, line, column)), line_(line), column_(std::move(column)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& m, std::size_t line, const std::string& col) {
    std::string out = "line " + std::to_string(line);
    if (!col.empty()) out += ", column '" + col + "'";
    return out + ": " + m;
  }

  std::size_t line_;
  std::string column_;
};

}  // namespace jjfab
