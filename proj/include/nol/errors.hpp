#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace nol {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value encountered in a weight, prediction or accumulator.
class NumericFault : public Error {
 public:
  explicit NumericFault(const std::string& what,
                        std::optional<std::size_t> coordinate = std::nullopt)
      : Error(what), coordinate_(coordinate) {}

  std::optional<std::size_t> coordinate() const { return coordinate_; }

 private:
  std::optional<std::size_t> coordinate_;
};

// Raised for malformed or inconsistent input data. Maps to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class InvalidLabel : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace nol
