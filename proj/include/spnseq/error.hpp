#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spnseq {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Topology or prefix does not describe a valid network.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Caller supplied data of the wrong shape or range.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite weights, inputs or intermediate results.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation is undefined for the given arguments (e.g. a posterior
// requested from a max-product evaluation).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Exhaustive reference refused an input that exceeds its budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line() is 0 for document-level errors.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error(message), line_(0) {}
  ParseError(const std::string& message, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace spnseq
