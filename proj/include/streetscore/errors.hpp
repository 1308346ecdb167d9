#pragma once

#include <stdexcept>
#include <string>

namespace streetscore {

// Coarse error category used by the CLI to pick an exit code:
// validation/parse/io map to exit 1, degenerate statistics to exit 2.
enum class ErrorKind {
  validation,
  parse,
  io,
  degenerate_stats,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad values, broken invariants, dangling references, empty inputs.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

// Malformed input documents (GeoJSON, JSON Lines, CSV).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorKind::parse, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Constant series, zero variance, rank-deficient designs, too few rows.
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what)
      : Error(ErrorKind::degenerate_stats, what) {}
};

}  // namespace streetscore
