#pragma once

#include <stdexcept>
#include <string>

namespace tabprobe {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: ragged CSV rows, duplicate headers, unusable columns.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or argument outside an operation's domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Endpoint failure that was retried until the budget ran out (429, 5xx, timeouts).
class TransientFailure : public Error {
 public:
  using Error::Error;
};

/// Endpoint failure that must not be retried (4xx other than 429).
class PermanentFailure : public Error {
 public:
  PermanentFailure(const std::string& what, int status) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace tabprobe
