#pragma once

#include <stdexcept>
#include <string>

namespace sparsectl {

// Base of every error thrown by the library. Callers that only need a
// message can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong dimensions, out-of-range scalars, empty input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// B^T B is singular or too badly conditioned to form the projector.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

// The plant violates Assumption 1 (rank) or Assumption 2 (a_n < 1).
class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

// No gain in the constructive family reaches the requested bound.
class Infeasible : public Error {
 public:
  using Error::Error;
};

// Certificate with ||D||^2 >= 1: thresholds are undefined.
class InvalidCertificate : public Error {
 public:
  using Error::Error;
};

// Plant/plan file could not be read, parsed or validated.
class LoadError : public Error {
 public:
  using Error::Error;
};

// A plan file that does not belong to the plant it is paired with.
class PlanMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace sparsectl
