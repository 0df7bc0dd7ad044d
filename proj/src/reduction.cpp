#include "morcell/reduction.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "morcell/errors.hpp"
#include "morcell/metrics.hpp"
#include "morcell/parallel.hpp"

namespace morcell
{

namespace
{

// Residuals at or below this fraction of the largest snapshot entry count as zero.
constexpr double ei_zero_rtol = 1e-12;

Index argmax_first(const Eigen::Ref<const Eigen::VectorXd> &v)
{
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best])
      best = i;
  return best;
}

} // namespace

PodResult pod(const VectorArray &snapshots, Index modes, std::ostream *notice)
{
  if (snapshots.empty())
    throw ConfigError("pod: no snapshots");
  if (modes < 0)
    throw ConfigError("pod: negative mode count");
  Eigen::MatrixXd gram = snapshots.gramian();
  gram = 0.5 * (gram + gram.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw EvaluationError("pod: eigendecomposition failed");

  const Index k = gram.rows();
  const double top = std::sqrt(std::max(0.0, eig.eigenvalues()[k - 1]));
  std::vector<Index> kept;
  for (Index i = k - 1; i >= 0 && static_cast<Index>(kept.size()) < modes; --i)
  {
    const double sigma = std::sqrt(std::max(0.0, eig.eigenvalues()[i]));
    if (!(sigma > pod_rtol * top))
      break;
    kept.push_back(i);
  }
  Eigen::MatrixXd coeffs(k, static_cast<Index>(kept.size()));
  Eigen::VectorXd sv(static_cast<Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j)
  {
    sv[static_cast<Index>(j)] = std::sqrt(eig.eigenvalues()[kept[j]]);
    coeffs.col(static_cast<Index>(j)) = eig.eigenvectors().col(kept[j]) / sv[static_cast<Index>(j)];
  }
  PodResult result;
  result.modes = gram_schmidt(snapshots.lincomb(coeffs));
  result.singular_values = sv.head(result.modes.size());
  result.rank_limited = result.modes.size() < modes;
  if (result.rank_limited && notice)
    *notice << "pod: returning " << result.modes.size() << " of " << modes << " requested modes (rank)\n";
  return result;
}

VectorArray gram_schmidt(const VectorArray &vectors, Index offset, double drop_tol)
{
  if (offset < 0 || offset > vectors.size())
    throw ConfigError("gram_schmidt: offset out of range");
  VectorArray result = vectors.slice(0, offset);
  for (Index i = offset; i < vectors.size(); ++i)
  {
    VectorArray v = vectors.at(i);
    const double original = v.norms()[0];
    if (!(original > 0.0))
      continue;
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < result.size(); ++j)
      {
        const VectorArray q = result.at(j);
        v.axpy(-q.inner(v)(0, 0), q);
      }
    const double norm = v.norms()[0];
    if (norm < drop_tol * original)
      continue;
    v.scal(1.0 / norm);
    result.append(v);
  }
  return result;
}

ReducedBasis ReducedBasis::truncated(Index n) const
{
  return {c.slice(0, std::min(n, c.size())), phi.slice(0, std::min(n, phi.size()))};
}

VectorArray ReducedBasis::block(const DofLayout &layout) const
{
  VectorArray v = layout.embed(c, Field::Concentration);
  v.append(layout.embed(phi, Field::Potential));
  return v;
}

PodGreedyResult pod_greedy(const InstationaryDiscretization &detailed, const DofLayout &layout,
                           const std::vector<Parameter> &training, const std::vector<Trajectory> &trajectories,
                           const GreedySettings &settings, std::ostream *log)
{
  using Clock = std::chrono::steady_clock;
  if (training.empty())
    throw ConfigError("pod_greedy: empty training set");
  if (trajectories.size() != training.size())
    throw ConfigError("pod_greedy: need one detailed trajectory per training parameter");
  if (settings.target_size < 0)
    throw ConfigError("pod_greedy: negative target size");

  PodGreedyResult out;
  ReducedBasis &basis = out.basis;
  basis.c = VectorArray(layout.field_space());
  basis.phi = VectorArray(layout.field_space());
  const std::size_t count = training.size();

  for (Index iteration = 0;; ++iteration)
  {
    const auto start = Clock::now();
    std::vector<double> errors(count, 1.0);
    Index selected = 0;
    if (basis.c.empty() && basis.phi.empty())
    {
      std::vector<double> nc(count), np(count);
      for (std::size_t i = 0; i < count; ++i)
      {
        nc[i] = linfty_l2_norm(trajectories[i], layout, Field::Concentration);
        np[i] = linfty_l2_norm(trajectories[i], layout, Field::Potential);
      }
      const double mc = *std::max_element(nc.begin(), nc.end());
      const double mp = *std::max_element(np.begin(), np.end());
      Eigen::VectorXd score(static_cast<Index>(count));
      for (std::size_t i = 0; i < count; ++i)
        score[static_cast<Index>(i)] = (mc > 0 ? nc[i] / mc : 0.0) + (mp > 0 ? np[i] / mp : 0.0);
      selected = argmax_first(score);
    }
    else
    {
      const ReducedModel model = reduce(detailed, layout, basis);
      parallel_for(count, settings.workers, [&](std::size_t i) {
        try
        {
          const Trajectory approx = reconstruct(model.discretization.solve(training[i]), model.block_basis);
          errors[i] = std::max(error_linfty_l2(trajectories[i], approx, layout, Field::Concentration),
                               error_linfty_l2(trajectories[i], approx, layout, Field::Potential));
        }
        catch (const SolverError &)
        {
          errors[i] = std::numeric_limits<double>::infinity();
        }
        if (std::isnan(errors[i]))
          errors[i] = std::numeric_limits<double>::infinity();
      });
      selected = argmax_first(Eigen::Map<const Eigen::VectorXd>(errors.data(), static_cast<Index>(count)));
    }

    GreedyRecord rec;
    rec.iteration = iteration;
    rec.selected = selected;
    rec.mu = training[static_cast<std::size_t>(selected)];
    rec.max_error = errors[static_cast<std::size_t>(selected)];

    const bool done = basis.size() >= settings.target_size || rec.max_error <= settings.tolerance;
    bool extended = false;
    if (!done)
    {
      const Trajectory &traj = trajectories[static_cast<std::size_t>(selected)];
      for (Field f : {Field::Concentration, Field::Potential})
      {
        VectorArray &v = f == Field::Concentration ? basis.c : basis.phi;
        if (v.size() >= settings.target_size)
          continue;
        VectorArray err = layout.field(traj.states, f);
        if (!v.empty())
          err.axpy(-1.0, v.lincomb(v.inner(err)));
        const PodResult mode = pod(err, 1);
        if (mode.modes.empty())
          continue;
        VectorArray extended_basis = v;
        extended_basis.append(mode.modes);
        const Index before = v.size();
        v = gram_schmidt(extended_basis, before);
        extended = extended || v.size() > before;
      }
    }
    rec.size_c = basis.c.size();
    rec.size_phi = basis.phi.size();
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.log.records.push_back(rec);
    out.log.errors.push_back(errors);
    if (log)
      *log << "greedy iteration=" << iteration << " selected=" << selected << " I=" << rec.mu.charge_rate
           << " T=" << rec.mu.temperature << " max_error=" << rec.max_error << " size_c=" << rec.size_c
           << " size_phi=" << rec.size_phi << "\n";
    if (done)
      break;
    if (!extended)
    {
      if (log)
        *log << "greedy: no new basis direction, stopping\n";
      break;
    }
  }
  return out;
}

VectorArray operator_snapshots(const Operator &op, const std::vector<Trajectory> &trajectories,
                               const VectorArray *block_basis, unsigned workers)
{
  std::vector<VectorArray> parts(trajectories.size());
  parallel_for(trajectories.size(), workers, [&](std::size_t i) {
    const Trajectory &t = trajectories[i];
    VectorArray out = op.apply(t.states, t.mu);
    if (block_basis && block_basis->size() > 0)
      out.append(op.apply(block_basis->lincomb(block_basis->inner(t.states)), t.mu));
    parts[i] = std::move(out);
  });
  VectorArray all(op.range_space());
  for (const auto &p : parts)
    all.append(p);
  return all;
}

VectorArray jacobian_snapshots(const Operator &op, const std::vector<Trajectory> &trajectories,
                               const VectorArray &block_basis, unsigned workers)
{
  std::vector<VectorArray> parts(trajectories.size());
  parallel_for(trajectories.size(), workers, [&](std::size_t i) {
    const Trajectory &t = trajectories[i];
    VectorArray out(op.range_space());
    for (Index s = 0; s < t.states.size(); ++s)
      out.append(op.jacobian(t.states.at(s), t.mu)->apply(block_basis));
    parts[i] = std::move(out);
  });
  VectorArray all(op.range_space());
  for (const auto &p : parts)
    all.append(p);
  return all;
}

void normalize_columns(VectorArray &snapshots, const Eigen::VectorXd &scaling)
{
  if (scaling.size() != snapshots.dim())
    throw ConfigError("normalize_columns: scaling does not match the snapshots");
  for (Index j = 0; j < snapshots.size(); ++j)
  {
    const double m = scaling.cwiseProduct(snapshots.data().col(j)).cwiseAbs().maxCoeff();
    if (m > 0.0)
      snapshots.data().col(j) /= m;
  }
}

std::shared_ptr<const Operator> interpolation_target(std::shared_ptr<const Operator> op)
{
  if (auto split = op->affine_splitting())
    return split->remainder;
  return op;
}

Eigen::VectorXd block_scaling(const VectorArray &snapshots, const DofLayout &layout)
{
  if (snapshots.dim() != layout.size())
    throw ConfigError("block_scaling: snapshots do not match layout");
  Eigen::VectorXd w(layout.size());
  for (Field f : {Field::Concentration, Field::Potential})
  {
    const Index offset = layout.dof(f, 0);
    const double m = snapshots.empty() ? 0.0 : snapshots.data().middleRows(offset, layout.cells()).cwiseAbs().maxCoeff();
    w.segment(offset, layout.cells()).setConstant(m > 0.0 ? 1.0 / m : 1.0);
  }
  return w;
}

EIData ei_greedy(const VectorArray &snapshots, Index max_size, double tol, const Eigen::VectorXd *scaling,
                 std::ostream *notice)
{
  if (max_size < 0 || tol < 0.0)
    throw ConfigError("ei_greedy: invalid size or tolerance");
  const Index n = snapshots.dim();
  Eigen::VectorXd w = scaling ? *scaling : Eigen::VectorXd::Ones(n);
  if (w.size() != n || !(w.array() > 0.0).all())
    throw ConfigError("ei_greedy: scaling must be positive with one entry per DOF");

  Eigen::MatrixXd r = w.asDiagonal() * snapshots.data();
  const double largest = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  Eigen::MatrixXd collateral(n, 0);
  EIData ei;

  auto max_residual = [&](Index &column) {
    if (r.cols() == 0)
    {
      column = 0;
      return 0.0;
    }
    const Eigen::VectorXd colmax = r.cwiseAbs().colwise().maxCoeff().transpose();
    column = argmax_first(colmax);
    return colmax[column];
  };

  for (;;)
  {
    Index column = 0;
    const double err = max_residual(column);
    ei.max_errors.push_back(err);
    if (ei.size() >= max_size || err <= tol)
      break;
    if (err <= ei_zero_rtol * largest)
    {
      if (notice)
        *notice << "ei_greedy: residual vanished after " << ei.size() << " of " << max_size
                << " interpolation points\n";
      break;
    }
    const Index dof = argmax_first(r.col(column).cwiseAbs());
    const Eigen::VectorXd u = r.col(column) / r(dof, column);
    r -= u * r.row(dof);
    collateral.conservativeResize(Eigen::NoChange, collateral.cols() + 1);
    collateral.col(collateral.cols() - 1) = u;
    ei.interpolation_dofs.push_back(dof);
  }
  ei.relative_residual = largest > 0.0 ? ei.max_errors.back() / largest : 0.0;

  // undo the scaling, keeping value 1 at the interpolation DOFs
  const Index m = ei.size();
  for (Index j = 0; j < m; ++j)
    collateral.col(j) = w.cwiseInverse().cwiseProduct(collateral.col(j)) * w[ei.interpolation_dofs[static_cast<std::size_t>(j)]];
  ei.interpolation_matrix.resize(m, m);
  for (Index i = 0; i < m; ++i)
    ei.interpolation_matrix.row(i) = collateral.row(ei.interpolation_dofs[static_cast<std::size_t>(i)]);
  ei.collateral_basis = VectorArray(snapshots.space(), std::move(collateral));
  return ei;
}

ReducedModel reduce(const InstationaryDiscretization &detailed, const DofLayout &layout,
                    const ReducedBasis &basis, EIData *ei)
{
  const auto &op = detailed.space_operator();
  if (op->source_dim() != layout.size())
    throw ConfigError("reduce: discretization does not match the DOF layout");
  VectorArray v = basis.block(layout);
  const Index r = v.size();

  auto mass = std::dynamic_pointer_cast<const MatrixOperator>(project(detailed.mass(), v, v));
  if (!mass)
    throw ConfigError("reduce: mass operator must be linear");
  const ParametricVector &guess = detailed.initial_guess();
  ParametricVector reduced_guess =
    guess.with_components(VectorArray(VectorSpace::euclidean(r), v.inner(guess.components())));

  std::shared_ptr<const Operator> reduced_op;
  if (ei)
  {
    const auto split = op->affine_splitting();
    if (split)
      reduced_op = std::make_shared<const LincombOperator>(
        std::vector<std::shared_ptr<const Operator>>{split->affine->projected(v, v),
                                                     make_ei_operator(*split->remainder, *ei, v, v)},
        std::vector<double>{1.0, 1.0});
    else
      reduced_op = make_ei_operator(*op, *ei, v, v);
  }
  else
    reduced_op = std::make_shared<const ProjectedOperator>(op, v, v);
  // Reduced residuals are L2(Omega) quantities while the detailed ones are
  // per-DOF, so the absolute tolerance is rescaled by sqrt(|K|).
  NewtonSettings newton = detailed.newton_settings();
  newton.abs_tol *= std::sqrt(layout.cell_volume());
  return {detailed.with_operators(reduced_op, mass, std::move(reduced_guess)).with_newton(newton), basis,
          std::move(v)};
}

Trajectory reconstruct(const Trajectory &reduced, const VectorArray &block_basis)
{
  if (reduced.states.dim() != block_basis.size())
    throw ConfigError("reconstruct: coefficient dimension does not match the basis");
  Trajectory out;
  out.dt = reduced.dt;
  out.mu = reduced.mu;
  out.states = block_basis.lincomb(reduced.states.data());
  return out;
}

Trajectory project_trajectory(const Trajectory &detailed, const VectorArray &block_basis)
{
  Trajectory out;
  out.dt = detailed.dt;
  out.mu = detailed.mu;
  out.states = VectorArray(VectorSpace::euclidean(block_basis.size()), block_basis.inner(detailed.states));
  return out;
}

} // namespace morcell
