#ifndef MORCELL_ERRORS_HPP
#define MORCELL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morcell
{

/// Base of all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or inconsistent input sizes.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Forbidden geometry, e.g. a positive particle touching a negative one.
class GeometryError : public Error
{
public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line of the offending token.
class ParseError : public Error
{
public:
  ParseError(const std::string &what, std::size_t line)
    : Error("line " + std::to_string(line) + ": " + what), line_(line)
  {
  }

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// A closed-form model function was evaluated outside its domain.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Non-finite input or output while evaluating an operator.
class EvaluationError : public Error
{
public:
  using Error::Error;
};

class SolverError : public Error
{
public:
  using Error::Error;
};

/// Raised by the direct solvers. `pivot()` is the failing column or -1 if unknown.
class SingularMatrixError : public SolverError
{
public:
  SingularMatrixError(const std::string &what, long pivot) : SolverError(what), pivot_(pivot) {}

  long pivot() const { return pivot_; }

private:
  long pivot_;
};

/// Newton did not converge. `residual()` is the last (scaled) residual norm.
class NewtonFailure : public SolverError
{
public:
  NewtonFailure(const std::string &what, double residual) : SolverError(what), residual_(residual) {}

  double residual() const { return residual_; }

private:
  double residual_;
};

/// Newton failure inside a time step. `step()` is the 1-based step index, 0 for
/// the initialization solve.
class StepFailure : public SolverError
{
public:
  StepFailure(const std::string &what, long step, double residual)
    : SolverError("step " + std::to_string(step) + ": " + what), step_(step), residual_(residual)
  {
  }

  long step() const { return step_; }
  double residual() const { return residual_; }

private:
  long step_;
  double residual_;
};

class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace morcell

#endif // MORCELL_ERRORS_HPP
