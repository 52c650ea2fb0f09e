#pragma once

#include <stdexcept>
#include <string>

namespace cpe {

// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent input data: embeddings, manifests, shapes.
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed CPEB/CPEA/JSON payload.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpe
