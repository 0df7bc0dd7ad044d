#ifndef MORCELL_DISCRETIZATION_HPP
#define MORCELL_DISCRETIZATION_HPP

#include <iosfwd>
#include <memory>

#include "morcell/operators.hpp"
#include "morcell/time_solver.hpp"

namespace morcell
{

/// Container of the operators of an instationary problem
///   E d/dt u + A_mu(u) = 0,
/// with E a linear selector of the time-dependent components. solve() is
/// written against the operator contract only, so replacing the operators by
/// reduced ones yields the reduced model without touching the solver.
///
/// The initial state solves E (u - u_guess(mu)) + (I - E) A_mu(u) = 0, i.e. the
/// selected components are taken from u_guess and the others are in
/// equilibrium with them.
class InstationaryDiscretization
{
public:
  InstationaryDiscretization(std::shared_ptr<const Operator> space_operator,
                             std::shared_ptr<const MatrixOperator> mass, ParametricVector initial_guess,
                             Index steps, double dt, NewtonSettings newton = {});

  const std::shared_ptr<const Operator> &space_operator() const { return operator_; }
  const std::shared_ptr<const MatrixOperator> &mass() const { return mass_; }
  const ParametricVector &initial_guess() const { return initial_guess_; }
  const VectorSpace &solution_space() const { return operator_->source_space(); }
  Index steps() const { return steps_; }
  double dt() const { return dt_; }
  const NewtonSettings &newton_settings() const { return newton_; }

  /// Same time discretization with replaced operators and initial data.
  InstationaryDiscretization with_operators(std::shared_ptr<const Operator> space_operator,
                                            std::shared_ptr<const MatrixOperator> mass,
                                            ParametricVector initial_guess) const;
  InstationaryDiscretization with_time(Index steps, double dt) const;
  InstationaryDiscretization with_newton(NewtonSettings settings) const;

  /// Initial state for mu (the stationary solve described above).
  VectorArray initial_state(const Parameter &mu, std::ostream *log = nullptr,
                            SolveStats *stats = nullptr) const;

  Trajectory solve(const Parameter &mu, std::ostream *log = nullptr, SolveStats *stats = nullptr) const;

private:
  std::shared_ptr<const Operator> operator_;
  std::shared_ptr<const MatrixOperator> mass_;
  ParametricVector initial_guess_;
  Index steps_;
  double dt_;
  NewtonSettings newton_;
};

} // namespace morcell

#endif // MORCELL_DISCRETIZATION_HPP
