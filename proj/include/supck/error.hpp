#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace supck {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid numeric parameter (sigma, lambda, tolerances, grid values).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (clouds, tables, structure files).
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace supck
