#pragma once

#include <stdexcept>
#include <string>

namespace treerange {

/// A probability law failed validation (normalization, criticality, ...).
class InvalidDistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Conditioned sampling was requested for a size of probability zero.
class UnreachableSize : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The associated walk of the offspring law lives on a strict sublattice.
class PeriodicOffspring : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The jump law has return times with a common divisor > 1.
class PeriodicJump : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class QuadratureNotConverged : public std::runtime_error {
 public:
  QuadratureNotConverged(double value, double error)
      : std::runtime_error("quadrature did not converge: value " + std::to_string(value) + ", error " +
                           std::to_string(error)),
        value_(value),
        error_(error) {}

  double value() const noexcept { return value_; }
  double error() const noexcept { return error_; }

 private:
  double value_;
  double error_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace treerange
