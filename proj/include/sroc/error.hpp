#pragma once

#include <stdexcept>
#include <string>

namespace sroc {

// Bad user input: malformed config, unknown enum names, invalid ratios.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Anything wrong with the data itself: shapes, non-finite values, file contents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class NotPositiveDefiniteError : public DataError {
 public:
  using DataError::DataError;
};

// Raised when a category cannot supply a pollution pool and still keep
// defective samples for validation.
class CategoryExcludedError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace sroc
