#ifndef MORCELL_METRICS_HPP
#define MORCELL_METRICS_HPP

#include "morcell/fv_operator.hpp"
#include "morcell/time_solver.hpp"

namespace morcell
{

/// max_t ||u_f^(t)|| in the volume-weighted L2 norm of one field.
double linfty_l2_norm(const Trajectory &traj, const DofLayout &layout, Field field);

/// max_t ||(u - v)_f^(t)|| / max_t ||u_f^(t)||. Throws EvaluationError if the
/// detailed field vanishes identically, ConfigError on mismatched trajectories.
double error_linfty_l2(const Trajectory &detailed, const Trajectory &approx, const DofLayout &layout,
                       Field field);

} // namespace morcell

#endif // MORCELL_METRICS_HPP
