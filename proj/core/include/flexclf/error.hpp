#pragma once

#include <stdexcept>
#include <string>

namespace flexclf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InputOutOfBounds : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Raised by iterative matrix-equation solvers (Riccati, Lyapunov) when the
/// iteration diverges or stalls.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Non-finite or indefinite problem data reached the one-step solver.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class ProblemTooLarge : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GridTooLarge : public Error {
 public:
  using Error::Error;
};

class EmptyLog : public Error {
 public:
  using Error::Error;
};

}  // namespace flexclf
