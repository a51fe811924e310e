#pragma once

#include <stdexcept>
#include <string>

namespace spinmetro {

/// Bad user configuration (unknown key, malformed number, out-of-range value).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure, e.g. an eigensolver that did not converge.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The fidelity never revives above threshold inside the scan window.
class NoRevivalError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// The bound matrix has no positive eigenvalue: the encoding produces no signal.
class ZeroSignalError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// Zero measurement variance with nonzero slope (formally infinite precision).
class SingularMeasurementError : public NumericError {
  public:
    using NumericError::NumericError;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace spinmetro
