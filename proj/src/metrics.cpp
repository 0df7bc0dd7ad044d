#include "morcell/metrics.hpp"

#include "morcell/errors.hpp"

namespace morcell
{

double linfty_l2_norm(const Trajectory &traj, const DofLayout &layout, Field field)
{
  if (traj.states.dim() != layout.size())
    throw ConfigError("trajectory does not match the DOF layout");
  const VectorArray f = layout.field(traj.states, field);
  return f.size() ? f.norms().maxCoeff() : 0.0;
}

double error_linfty_l2(const Trajectory &detailed, const Trajectory &approx, const DofLayout &layout,
                       Field field)
{
  if (detailed.states.size() != approx.states.size() || detailed.states.dim() != approx.states.dim())
    throw ConfigError("error: trajectories differ in length or dimension");
  const double denominator = linfty_l2_norm(detailed, layout, field);
  if (!(denominator > 0.0))
    throw EvaluationError("error: detailed field has zero norm");
  Trajectory diff = detailed;
  diff.states.axpy(-1.0, approx.states);
  return linfty_l2_norm(diff, layout, field) / denominator;
}

} // namespace morcell
