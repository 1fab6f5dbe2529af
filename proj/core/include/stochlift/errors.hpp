#pragma once

#include <stdexcept>
#include <string>

namespace stochlift {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or vector dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Step or component index outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive (semi)definite is not.
class NotPsdError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (probabilities, degrees of
/// freedom, risk levels).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Scenario or problem configuration is malformed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A method was asked to handle a constraint or risk level it cannot
/// represent.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A trajectory does not replay consistently through the dynamics.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

/// A factorization or linear solve failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace stochlift
