#pragma once

#include <stdexcept>
#include <string>

namespace mint {

// Broad error classes. The numeric values double as CLI exit codes and as
// the status codes of the C API.
enum class ErrorKind : int {
  config = 2,
  data = 3,
  internal = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad flags, unknown method names, malformed run configs.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// Trace/score/count files that do not parse or violate the schema.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::data, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A document lacks a field a metric needs.
class UnsupportedMethodError : public Error {
 public:
  UnsupportedMethodError(const std::string& method, const std::string& field)
      : Error(ErrorKind::data, method + " requires field " + field), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Zero denominators, constant vectors, single-class groups.
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::data, what) {}
};

}  // namespace mint
