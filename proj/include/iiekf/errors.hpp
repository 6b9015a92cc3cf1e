#pragma once

#include <stdexcept>
#include <string>

namespace iiekf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Matrix handed to vee() or from_matrix() is not in the algebra / group.
class NotInGroup : public Error {
 public:
  using Error::Error;
};

/// Rotation angle within 1e-6 of pi: the principal log is ambiguous there.
class AngleNearPi : public Error {
 public:
  using Error::Error;
};

class NotPSD : public Error {
 public:
  using Error::Error;
};

/// H P H^T + N is singular or too badly conditioned for the standard gain.
class SingularInnovation : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class SingularCovariance : public Error {
 public:
  using Error::Error;
};

class IntegrationDiverged : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Gauss-Newton of one equation failed to reach the tolerance.
class NotConverged : public Error {
 public:
  NotConverged(std::size_t equation, const std::string& what)
      : Error(what), equation_(equation) {}
  std::size_t equation() const { return equation_; }

 private:
  std::size_t equation_;
};

/// A previously satisfied equation was broken by a later one, or the last
/// equation could not be satisfied at all.
class InconsistentSystem : public Error {
 public:
  InconsistentSystem(std::size_t equation, const std::string& what)
      : Error(what), equation_(equation) {}
  std::size_t equation() const { return equation_; }

 private:
  std::size_t equation_;
};

}  // namespace iiekf
