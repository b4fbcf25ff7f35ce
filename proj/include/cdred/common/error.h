#pragma once

#include <stdexcept>
#include <string>

namespace cdred {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Widths or shapes disagree with a declared layout.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A caller broke an API precondition (stale cache, wrong call order).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible file on disk.
class FormatError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf surfaced in a loss, gradient or return estimate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A buffer does not yet hold enough data to sample from.
class NotReadyError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked in a model mode that does not support it.
class ModeError : public Error {
 public:
  using Error::Error;
};

class BatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdred
