#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bayesgp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The jittered kernel matrix is not numerically positive definite.
class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

/// An input column has zero spread, so no positive initial lengthscale exists.
class DegenerateDesign : public Error {
 public:
  using Error::Error;
};

/// Burn-in and thinning left no posterior samples to aggregate.
class EmptyChain : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Base for delimited-text ingestion errors; carries the 1-based line number.
class DatasetFormatError : public Error {
 public:
  DatasetFormatError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MalformedRow : public DatasetFormatError {
 public:
  using DatasetFormatError::DatasetFormatError;
};

class NonNumericField : public DatasetFormatError {
 public:
  using DatasetFormatError::DatasetFormatError;
};

class TooFewColumns : public DatasetFormatError {
 public:
  using DatasetFormatError::DatasetFormatError;
};

}  // namespace bayesgp
