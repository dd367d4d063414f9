// error.hpp
//
// Exception types shared by every condpred module. All derive from the
// standard hierarchy so callers can catch std::exception generically.

#ifndef CONDPRED_ERROR_HPP
#define CONDPRED_ERROR_HPP

#include <stdexcept>
#include <string>

namespace condpred {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine (quadrature, factorization) failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is well-formed but outside what the operation supports
/// (e.g. inverting a non-monotone regression function).
class UnsupportedInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation point lies outside the region where an estimator is trusted.
class ExtrapolationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Model construction failed (non positive-definite covariance, bad parameters).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Too few simulated events to estimate what was requested.
class SampleSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace condpred

#endif  // CONDPRED_ERROR_HPP
