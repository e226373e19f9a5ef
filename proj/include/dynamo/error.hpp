#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dynamo {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's mathematical domain (negative tau, length
// mismatch, out-of-bounds design, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented precondition (epochs = 0, lr = 0, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}

  // 1-based line number in the source file.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class DegenerateDatasetError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynamo
