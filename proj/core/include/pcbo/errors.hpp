#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pcbo {

/// Bad argument: dimension mismatch, out-of-range parameter, malformed data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Floating-point failure: non-finite objective, factorization breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization failed at every jitter level that was tried.
class FactorizationError : public NumericalError {
 public:
  FactorizationError(const std::string& what, std::vector<double> attempted)
      : NumericalError(what), attempted_jitter_(std::move(attempted)) {}

  const std::vector<double>& attempted_jitter() const noexcept { return attempted_jitter_; }

 private:
  std::vector<double> attempted_jitter_;
};

/// A requested grid or buffer would exceed the configured size cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ask-tell protocol misuse (suggest twice, observe without a pending batch).
class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcbo
