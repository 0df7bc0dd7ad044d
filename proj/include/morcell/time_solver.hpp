#ifndef MORCELL_TIME_SOLVER_HPP
#define MORCELL_TIME_SOLVER_HPP

#include <iosfwd>
#include <vector>

#include "morcell/operators.hpp"

namespace morcell
{

struct NewtonSettings
{
  double abs_tol = 1e-11;
  double rel_tol = 1e-9;
  int max_iter = 25;
  double damping_factor = 0.5;
  double min_step = 0x1.0p-10;
  /// Armijo constant of the sufficient decrease test.
  double armijo = 1e-4;
  bool equilibrate = true;
  /// A residual within stagnation_factor * tolerance is accepted once the full
  /// Newton step no longer reduces it (roundoff floor of the operator).
  double stagnation_factor = 100.0;

  void validate() const;
};

struct NewtonIteration
{
  int iteration = 0;
  double residual = 0.0;
  double damping = 1.0;
  double seconds = 0.0;
};

struct NewtonResult
{
  VectorArray solution;
  std::vector<NewtonIteration> log; // entry 0 is the initial residual
  double residual = 0.0;
  bool stagnated = false;

  int iterations() const { return static_cast<int>(log.size()) - 1; }
};

/// Solves op(u) = rhs for a single vector u, starting from `guess`.
///
/// Converged when ||S r||_2 <= abs_tol + rel_tol ||S_0 r_0||_2, with S the row
/// equilibration of the Jacobian at the guess (identity if disabled), kept for the
/// whole solve. Steps are damped
/// by halving until ||S r|| decreases sufficiently. Throws SolverError when
/// max_iter is exceeded or the step floor is reached, SingularMatrixError when a
/// linear solve fails. Neither counts as failure while the residual is within
/// stagnation_factor times the tolerance; the result is then marked stagnated.
NewtonResult newton(const Operator &op, const VectorArray &rhs, const VectorArray &guess,
                    const Parameter &mu, const NewtonSettings &settings = {});

struct Trajectory
{
  VectorArray states; // u^(0) .. u^(T)
  double dt = 0.0;
  Parameter mu;

  Index steps() const { return states.size() - 1; }
};

/// Counters collected by implicit_euler.
struct SolveStats
{
  long newton_iterations = 0;
  double newton_seconds = 0.0;
  double total_seconds = 0.0;
};

class InstationaryDiscretization;

/// Implicit Euler: (1/dt) E (u^(t+1) - u^(t)) + A(u^(t+1)) = 0 for t < steps,
/// starting from the discretization's initial state. Iterations are logged to
/// `log` as `step= iter= residual= damping=` lines. Throws StepFailure.
Trajectory implicit_euler(const InstationaryDiscretization &d, const Parameter &mu, Index steps, double dt,
                          std::ostream *log = nullptr, SolveStats *stats = nullptr);

} // namespace morcell

#endif // MORCELL_TIME_SOLVER_HPP
