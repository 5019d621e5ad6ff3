#pragma once

#include <stdexcept>
#include <string>

namespace nelcorr {

// Base of every library error. Subclasses name the failure category so that
// front ends can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or violated preconditions.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Evaluation point outside the region where a function is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Analytic wave function has non-negligible mass outside the grid.
class DomainTruncationError : public Error {
 public:
  using Error::Error;
};

// Iterative numerical procedure failed (no convergence, NaN, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Nodal set of a wave function cannot be located reliably.
class NodeDetectionError : public Error {
 public:
  using Error::Error;
};

// Coefficients violate the common-energy constraint of a stationary state.
class InconsistentStateError : public Error {
 public:
  using Error::Error;
};

// Observables that are not jointly defined (same cluster, different times).
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

// State outside the family handled by a backend.
class UnsupportedStateError : public Error {
 public:
  using Error::Error;
};

// Node patch construction failed.
class RegularizationError : public Error {
 public:
  using Error::Error;
};

// Rejection sampler acceptance rate below threshold.
class EnvelopeError : public Error {
 public:
  using Error::Error;
};

// Drift clamp engaged on too many steps.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

// Arrangements that share observables cannot be merged into a product model.
class TransitivityError : public Error {
 public:
  using Error::Error;
};

}  // namespace nelcorr
