// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace emaslov {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric matrix numerically singular at a queried chart point.
class DegenerateMetric : public Error {
 public:
  using Error::Error;
};

/// The active derivative provider cannot supply a requested partial.
class DerivativeUnavailable : public Error {
 public:
  using Error::Error;
};

/// Trajectory left the validity region of the coordinate chart.
class ChartExit : public Error {
 public:
  using Error::Error;
};

/// Adaptive integrator failed (step underflow or step budget exhausted).
class IntegratorFailure : public Error {
 public:
  using Error::Error;
};

/// Initial tangent basis could not be g-orthonormalized.
class GramSchmidtFailure : public Error {
 public:
  using Error::Error;
};

/// Energy-constrained machinery invoked with kappa == 0.
class ZeroEnergy : public Error {
 public:
  using Error::Error;
};

/// det M(t) vanishes but the numerical kernel cannot be resolved.
class DegenerateCrossing : public Error {
 public:
  using Error::Error;
};

/// A Lagrangian pair required to be transversal is not.
class NotTransversal : public Error {
 public:
  using Error::Error;
};

/// Auxiliary-Lagrangian search exhausted its refinement budget.
class RefinementExhausted : public Error {
 public:
  using Error::Error;
};

/// Integer Maslov index demanded but an endpoint touches the Maslov cycle.
class NonIntegerResult : public Error {
 public:
  using Error::Error;
};

/// A Maslov-index endpoint lies (numerically) on the Maslov cycle.
class EndpointOnCycle : public Error {
 public:
  using Error::Error;
};

/// Requested instant is an ordinary conjugate instant; J*-solve is singular.
class ConjugateEndpoint : public Error {
 public:
  using Error::Error;
};

/// A spectral-flow endpoint form is numerically degenerate.
class DegenerateEndpoint : public Error {
 public:
  using Error::Error;
};

/// Galerkin resolutions N and 2N disagree on a spectral-flow value.
class NotConverged : public Error {
 public:
  using Error::Error;
};

/// Linearized transfer matrix not invertible (never expected).
class SingularTransfer : public Error {
 public:
  using Error::Error;
};

/// T coincides with a conjugate instant of the named flavor.
class EndpointConjugate : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace emaslov
