#pragma once

#include <stdexcept>
#include <string>

namespace pseudolabel {

// Base of every error the library throws. Subclasses map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or usage (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data, numerical failure during training (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// External classifier backend failed or violated the wire protocol (exit code 3).
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseudolabel
