#pragma once

#include <stdexcept>
#include <string>

namespace tdlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A probability row is negative or does not sum to one.
class InvalidStochastic : public Error {
 public:
  using Error::Error;
};

/// The chain induced by the policy is not a single communicating class.
class NotIrreducible : public Error {
 public:
  using Error::Error;
};

/// Aw + b = 0 has no solution. Cannot happen for a system built from a valid
/// chain, so seeing this means a numerical or programming bug.
class InconsistentSystem : public Error {
 public:
  using Error::Error;
};

/// rank(A) != rank(A^2): the zero eigenvalue of A has a Jordan block.
class ZeroEigenvalueNotSemisimple : public Error {
 public:
  using Error::Error;
};

class BudgetTooSmall : public Error {
 public:
  using Error::Error;
};

class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

class NonFiniteIterate : public Error {
 public:
  using Error::Error;
};

/// Two independent computations of the same quantity disagree.
class CrossCheckFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace tdlab
