#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mixed_gpe {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent user input (mesh parameters, potential grids, config keys).
class InvalidConfiguration : public Error {
public:
  using Error::Error;
};

/// Degenerate geometry met during assembly.
class AssemblyError : public Error {
public:
  using Error::Error;
};

/// Element of a mesh does not lie inside a single cell of a piecewise-constant potential.
class AlignmentError : public Error {
public:
  using Error::Error;
};

/// A matrix handed to the Cholesky factorization has a nonpositive pivot.
class NotSpdError : public Error {
public:
  using Error::Error;
};

/// A diagonal that must be strictly positive is not.
class DiagonalSingularity : public Error {
public:
  using Error::Error;
};

/// Two meshes that were expected to be related by red refinement are not.
class LineageError : public Error {
public:
  using Error::Error;
};

/// One (energy, residual) pair of a nonlinear iteration.
struct TracePoint {
  double energy;
  double residual;
};

/// The nonlinear solver ran out of iterations or could not decrease the energy.
class SolverError : public Error {
public:
  enum class Kind { NonConvergence, Stagnation };

  SolverError(Kind kind, const std::string& what, std::vector<TracePoint> trace)
      : Error(what), kind_(kind), trace_(std::move(trace)) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<TracePoint>& trace() const noexcept { return trace_; }

private:
  Kind kind_;
  std::vector<TracePoint> trace_;
};

} // namespace mixed_gpe
