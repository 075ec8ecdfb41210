#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace weu {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line. line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RatingRangeError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptyHistogramError : public Error {
 public:
  EmptyHistogramError() : Error("rating histogram has no observations") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace weu
