#pragma once

#include <stdexcept>
#include <string>

namespace laps {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, matrices, streams).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid or mutually inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An internal invariant did not hold. Indicates a bug, not bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Pseudo-labels contain no positive sample, so F1 is undefined.
class DegenerateLabelsError : public DataError {
 public:
  using DataError::DataError;
};

// A row that must be normalized has zero norm.
class DegenerateEmbeddingError : public DataError {
 public:
  using DataError::DataError;
};

// ICSS needs at least two members to form a pair.
class ClusterTooSmallError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace laps
