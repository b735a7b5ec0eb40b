#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toricbern {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Geometry / input validation.
class GeometryError : public Error {
public:
  using Error::Error;
};
class UnboundedPolytope : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class NotDelzant : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class NonPrimitiveNormal : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class EmptyInterior : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class DimensionMismatch : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class DegenerateFacet : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class OutsidePolytope : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class BoundaryPoint : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class NotSimplex : public GeometryError {
public:
  using GeometryError::GeometryError;
};
class UnsupportedMetric : public GeometryError {
public:
  using GeometryError::GeometryError;
};

// Expressions.
class ExprError : public Error {
public:
  using Error::Error;
};
class SyntaxError : public ExprError {
public:
  SyntaxError(const std::string& what, std::size_t offset)
      : ExprError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};
class UnknownIdentifier : public ExprError {
public:
  using ExprError::ExprError;
};
class VariableOutOfRange : public ExprError {
public:
  using ExprError::ExprError;
};
class DomainError : public ExprError {
public:
  using ExprError::ExprError;
};

// Numerical failures. The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
  using Error::Error;
};
class ConvergenceFailure : public NumericalError {
public:
  using NumericalError::NumericalError;
};
class NoConvergence : public NumericalError {
public:
  NoConvergence(const std::string& what, double previous, double last)
      : NumericalError(what), previous_(previous), last_(last) {}
  double previous_estimate() const noexcept { return previous_; }
  double last_estimate() const noexcept { return last_; }

private:
  double previous_;
  double last_;
};
class NotPositiveDefinite : public NumericalError {
public:
  using NumericalError::NumericalError;
};
class NonPositiveResidual : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace toricbern
