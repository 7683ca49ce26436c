#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bounce {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Outgoing inertial velocity does not exceed the racket velocity (w <= f'(t)).
class GrazingImpact : public Error {
public:
  using Error::Error;
};

/// The impact-time bracketing found no sign change inside the a-priori flight bound.
class SolverFailure : public Error {
public:
  using Error::Error;
};

/// The implicit-function denominator (arrival velocity) vanishes.
class SingularImplicitSystem : public Error {
public:
  using Error::Error;
};

/// An iterate left the region where the map is defined (e <= 0 or grazing).
class DomainExit : public Error {
public:
  using Error::Error;
};

/// A pair of impact times does not correspond to an admissible free-fall arc.
class InadmissibleSegment : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

/// The mountain-pass string collapsed onto an endpoint: no isolated minima.
class PathCollapse : public Error {
public:
  using Error::Error;
};

class GridTooCoarse : public Error {
public:
  using Error::Error;
};

/// Invalid run configuration. `field` names the offending entry.
class ConfigError : public Error {
public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

}  // namespace bounce
