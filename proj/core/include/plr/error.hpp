#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plr {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible matrix/vector dimensions. Messages name both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input outside an operation's domain (bad range, negative loss, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A column with zero sample variance cannot be standardized.
class ConstantColumnError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// NaN or Inf reached an operation that requires finite input.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// CSV / schema / JSONL ingestion problems.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite or ran away; carries where it happened.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch)
      : Error(what), epoch(epoch), batch(batch) {}
  std::size_t epoch;
  std::size_t batch;
};

/// Every candidate configuration failed during selection.
class SelectionError : public Error {
 public:
  using Error::Error;
};

/// Trials with mismatched keys ended up in one aggregation cell.
class AggregationError : public Error {
 public:
  using Error::Error;
};

}  // namespace plr
