#pragma once

#include <stdexcept>
#include <string>

namespace fxlab {

// Base for everything the library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad experiment config / bad parameters to an operation.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed input files, invariant violations in loaded data, coverage
// and alignment failures.
struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(msg) {}
};

struct ParseError : DataError {
  explicit ParseError(const std::string& msg) : DataError(msg) {}
};

struct ValidationError : DataError {
  explicit ValidationError(const std::string& msg) : DataError(msg) {}
};

// Numerical failures (eigen solver non-convergence, transform domain).
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// I/O failures on output paths.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace fxlab
