#pragma once

#include <stdexcept>
#include <string>

namespace mfgc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inner Hamiltonian maximization failed to converge (non-concave inner
// problem or a perturbation outside its admissible range).
struct InnerMaxDiverged : Error {
  using Error::Error;
};

// Fixed-point iteration exhausted its budget; carries the last residual.
struct NoConvergence : Error {
  NoConvergence(const std::string& what, double last_residual)
      : Error(what), residual(last_residual) {}
  double residual;
};

struct SizeMismatch : Error {
  using Error::Error;
};

// Block system factorization failed; reports the minimum eigenvalue of the
// symmetric part, which is the monotonicity margin that was violated.
struct SingularM : Error {
  SingularM(const std::string& what, double min_eig)
      : Error(what), min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

struct MissingConstants : Error {
  using Error::Error;
};

struct WrongCloudSize : Error {
  using Error::Error;
};

struct OutOfDomain : Error {
  using Error::Error;
};

struct StabilityViolation : Error {
  using Error::Error;
};

struct FixedPointFailure : Error {
  using Error::Error;
};

struct NonLqModel : Error {
  using Error::Error;
};

struct PicardStalled : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct UnknownKind : Error {
  using Error::Error;
};

}  // namespace mfgc
