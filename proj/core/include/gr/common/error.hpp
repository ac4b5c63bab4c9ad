#pragma once

#include <stdexcept>
#include <string>

namespace gr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file does not carry the expected columns or layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Vector or matrix dimensions disagree with a fitted model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Precondition on the input data is violated (too few rows, one class, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace gr
