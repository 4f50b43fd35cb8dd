#pragma once

#include <stdexcept>
#include <string>

namespace stochdrive {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed config text; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A parsed value violates an invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class EmptyResultError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

class ClusteringError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace stochdrive
