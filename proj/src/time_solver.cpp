#include "morcell/time_solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "morcell/discretization.hpp"
#include "morcell/errors.hpp"

namespace morcell
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Eigen::VectorXd row_scaling(const MatrixOperator &jac, bool enabled)
{
  const Index n = jac.range_dim();
  if (!enabled)
    return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
  if (jac.is_sparse())
  {
    const SparseMatrix &a = jac.sparse();
    for (Index r = 0; r < a.outerSize(); ++r)
    {
      double m = 0.0;
      for (SparseMatrix::InnerIterator it(a, r); it; ++it)
        m = std::max(m, std::abs(it.value()));
      if (m > 0.0)
        s[r] = 1.0 / m;
    }
  }
  else
  {
    const Eigen::MatrixXd &a = jac.dense();
    for (Index r = 0; r < n; ++r)
    {
      const double m = a.cols() ? a.row(r).cwiseAbs().maxCoeff() : 0.0;
      if (m > 0.0)
        s[r] = 1.0 / m;
    }
  }
  return s;
}

void log_line(std::ostream *log, long step, int iter, double residual, double damping)
{
  if (!log)
    return;
  char buf[128];
  std::snprintf(buf, sizeof buf, "step=%ld iter=%d residual=%.6e damping=%.6g\n", step, iter, residual,
                damping);
  *log << buf;
}

} // namespace

void NewtonSettings::validate() const
{
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
    throw ConfigError("newton: tolerances must be positive");
  if (max_iter < 1)
    throw ConfigError("newton: max_iter must be at least 1");
  if (!(damping_factor > 0.0 && damping_factor < 1.0) || !(min_step > 0.0 && min_step <= 1.0))
    throw ConfigError("newton: damping factor must lie in (0, 1) and min step in (0, 1]");
  if (!(stagnation_factor >= 1.0))
    throw ConfigError("newton: stagnation factor must be at least 1");
}

NewtonResult newton(const Operator &op, const VectorArray &rhs, const VectorArray &guess,
                    const Parameter &mu, const NewtonSettings &settings)
{
  settings.validate();
  if (guess.size() != 1 || rhs.size() != 1)
    throw ConfigError("newton: expected a single guess and right-hand side");

  auto residual_of = [&](const VectorArray &u) {
    VectorArray r = op.apply(u, mu);
    r.axpy(-1.0, rhs);
    return r;
  };

  NewtonResult result;
  VectorArray u = guess;
  VectorArray r = residual_of(u);
  auto jac = op.jacobian(u, mu);
  // the norm is fixed for the whole solve so accepted steps are monotone
  const Eigen::VectorXd scale = row_scaling(*jac, settings.equilibrate);
  auto norm_of = [&](const VectorArray &res) { return scale.cwiseProduct(res.data().col(0)).norm(); };

  double norm = norm_of(r);
  if (!std::isfinite(norm))
    throw NewtonFailure("newton: initial residual is not finite", norm);
  const double tol = settings.abs_tol + settings.rel_tol * norm;
  result.log.push_back({0, norm, 1.0, 0.0});

  const double floor = settings.stagnation_factor * tol;
  for (int iter = 1; norm > tol; ++iter)
  {
    if (iter > settings.max_iter && norm <= floor)
    {
      result.stagnated = true;
      break;
    }
    if (iter > settings.max_iter)
      throw NewtonFailure("newton: no convergence after " + std::to_string(settings.max_iter) +
                            " iterations (residual " + sci(norm) + ")",
                          norm);
    const auto start = Clock::now();
    if (iter > 1)
      jac = op.jacobian(u, mu);
    const VectorArray delta = jac->apply_inverse(r);

    double lambda = 1.0;
    for (;;)
    {
      VectorArray trial = u;
      trial.axpy(-lambda, delta);
      bool ok = false;
      VectorArray trial_r;
      double trial_norm = 0.0;
      try
      {
        trial_r = residual_of(trial);
        trial_norm = norm_of(trial_r);
        ok = std::isfinite(trial_norm) && trial_norm <= (1.0 - settings.armijo * lambda) * norm;
      }
      catch (const DomainError &)
      {
      }
      catch (const EvaluationError &)
      {
      }
      if (ok)
      {
        u = std::move(trial);
        r = std::move(trial_r);
        norm = trial_norm;
        break;
      }
      if (lambda == 1.0 && norm <= floor)
      {
        result.stagnated = true;
        break;
      }
      lambda *= settings.damping_factor;
      if (lambda < settings.min_step)
        throw NewtonFailure("newton: line search reached the minimal step at iteration " +
                              std::to_string(iter) + " (residual " + sci(norm) + ")",
                            norm);
    }
    if (result.stagnated)
      break;
    result.log.push_back({iter, norm, lambda, seconds_since(start)});
  }
  result.solution = std::move(u);
  result.residual = norm;
  return result;
}

Trajectory implicit_euler(const InstationaryDiscretization &d, const Parameter &mu, Index steps, double dt,
                          std::ostream *log, SolveStats *stats)
{
  if (steps < 0 || !(dt > 0.0))
    throw ConfigError("implicit Euler: need steps >= 0 and dt > 0");
  const auto start = Clock::now();
  Trajectory traj;
  traj.dt = dt;
  traj.mu = mu;
  traj.states = d.initial_state(mu, log, stats);

  auto step_operator = std::make_shared<LincombOperator>(
    std::vector<std::shared_ptr<const Operator>>{d.mass(), d.space_operator()}, std::vector<double>{1.0 / dt, 1.0});

  VectorArray u = traj.states;
  for (Index t = 1; t <= steps; ++t)
  {
    VectorArray rhs = d.mass()->apply(u);
    rhs.scal(1.0 / dt);
    // linear extrapolation of the last two states as starting point
    VectorArray guess = u;
    if (t > 1)
    {
      guess.scal(2.0);
      guess.axpy(-1.0, traj.states.at(t - 2));
    }
    NewtonResult res;
    try
    {
      res = newton(*step_operator, rhs, guess, mu, d.newton_settings());
    }
    catch (const NewtonFailure &e)
    {
      throw StepFailure(e.what(), t, e.residual());
    }
    catch (const SingularMatrixError &e)
    {
      throw StepFailure(e.what(), t, std::nan(""));
    }
    for (const auto &it : res.log)
      log_line(log, t, it.iteration, it.residual, it.damping);
    if (stats)
    {
      stats->newton_iterations += res.iterations();
      for (const auto &it : res.log)
        stats->newton_seconds += it.seconds;
    }
    u = std::move(res.solution);
    traj.states.append(u);
  }
  if (stats)
    stats->total_seconds += seconds_since(start);
  return traj;
}

// ---------------------------------------------------------------------------

InstationaryDiscretization::InstationaryDiscretization(std::shared_ptr<const Operator> space_operator,
                                                       std::shared_ptr<const MatrixOperator> mass,
                                                       ParametricVector initial_guess, Index steps, double dt,
                                                       NewtonSettings newton)
  : operator_(std::move(space_operator)), mass_(std::move(mass)), initial_guess_(std::move(initial_guess)),
    steps_(steps), dt_(dt), newton_(newton)
{
  if (!operator_ || !mass_)
    throw ConfigError("discretization: missing operator");
  if (!(operator_->source_space() == operator_->range_space()) ||
      !(mass_->source_space() == operator_->source_space()) || !(mass_->range_space() == operator_->range_space()))
    throw ConfigError("discretization: operator spaces do not match");
  if (!(initial_guess_.space() == operator_->source_space()))
    throw ConfigError("discretization: initial guess must lie in the solution space");
  if (steps_ < 0 || !(dt_ > 0.0))
    throw ConfigError("discretization: need steps >= 0 and dt > 0");
  newton_.validate();
}

InstationaryDiscretization
InstationaryDiscretization::with_operators(std::shared_ptr<const Operator> space_operator,
                                           std::shared_ptr<const MatrixOperator> mass,
                                           ParametricVector initial_guess) const
{
  return {std::move(space_operator), std::move(mass), std::move(initial_guess), steps_, dt_, newton_};
}

InstationaryDiscretization InstationaryDiscretization::with_time(Index steps, double dt) const
{
  return {operator_, mass_, initial_guess_, steps, dt, newton_};
}

InstationaryDiscretization InstationaryDiscretization::with_newton(NewtonSettings settings) const
{
  return {operator_, mass_, initial_guess_, steps_, dt_, settings};
}

VectorArray InstationaryDiscretization::initial_state(const Parameter &mu, std::ostream *log,
                                                      SolveStats *stats) const
{
  const auto identity = MatrixOperator::identity(mass_->source_space(), mass_->is_sparse());
  const std::shared_ptr<const MatrixOperator> terms[] = {identity, mass_};
  const double coefficients[] = {1.0, -1.0};
  auto complement = MatrixOperator::lincomb(terms, coefficients);
  auto stationary = std::make_shared<LincombOperator>(
    std::vector<std::shared_ptr<const Operator>>{mass_, std::make_shared<ConcatenationOperator>(complement, operator_)},
    std::vector<double>{1.0, 1.0});
  const VectorArray guess = initial_guess_.evaluate(mu);
  const VectorArray rhs = mass_->apply(guess);
  NewtonResult res;
  try
  {
    res = newton(*stationary, rhs, guess, mu, newton_);
  }
  catch (const NewtonFailure &e)
  {
    throw StepFailure(e.what(), 0, e.residual());
  }
  catch (const SingularMatrixError &e)
  {
    throw StepFailure(e.what(), 0, std::nan(""));
  }
  for (const auto &it : res.log)
    log_line(log, 0, it.iteration, it.residual, it.damping);
  if (stats)
  {
    stats->newton_iterations += res.iterations();
    for (const auto &it : res.log)
      stats->newton_seconds += it.seconds;
  }
  return std::move(res.solution);
}

Trajectory InstationaryDiscretization::solve(const Parameter &mu, std::ostream *log, SolveStats *stats) const
{
  return implicit_euler(*this, mu, steps_, dt_, log, stats);
}

} // namespace morcell
