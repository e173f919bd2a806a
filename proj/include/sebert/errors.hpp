#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sebert {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Index (token id, position, target) outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A normalization row or sequence has no unmasked position.
class DegenerateMaskError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be used (empty text, bad JSON line, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyTextError : public DataError {
 public:
  EmptyTextError() : DataError("text is empty after cleaning") {}
};

class GoldNotFoundError : public DataError {
 public:
  explicit GoldNotFoundError(std::string example_id)
      : DataError("gold entity not found in (truncated) text of example '" + example_id + "'"),
        id_(std::move(example_id)) {}
  const std::string& example_id() const noexcept { return id_; }

 private:
  std::string id_;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Sequence longer than the configured maximum.
class LengthError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// No admissible (start, end) pair exists.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint bytes are malformed.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error("checkpoint format error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Checkpoint and data/variant do not fit together.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace sebert
