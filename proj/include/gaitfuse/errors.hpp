#pragma once

#include <stdexcept>
#include <string>

namespace gaitfuse {

// Malformed input files, inconsistent datasets, shape contract violations.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

// Invalid configuration or usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a loss or parameter becomes non-finite during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The similarity waveform has fewer than two troughs.
class NoPeriodicityError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace gaitfuse
