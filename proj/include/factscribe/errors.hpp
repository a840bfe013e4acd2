// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace factscribe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an API call was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data problems: unreadable files, unknown ids, mismatched corpora.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed record in a line-oriented input file.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Corrupt, truncated or incompatible checkpoint file.
class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite loss or gradient during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace factscribe
