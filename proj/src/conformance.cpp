#include "morcell/conformance.hpp"

#include <atomic>
#include <cstdio>
#include <random>

#include "morcell/errors.hpp"
#include "morcell/experiment.hpp"
#include "morcell/metrics.hpp"
#include "morcell/random.hpp"
#include "morcell/reduction.hpp"

namespace morcell
{

namespace
{

/// Forwards to another operator and counts the calls.
class CountingOperator : public Operator
{
public:
  explicit CountingOperator(std::shared_ptr<const Operator> inner) : inner_(std::move(inner)) {}

  const VectorSpace &source_space() const override { return inner_->source_space(); }
  const VectorSpace &range_space() const override { return inner_->range_space(); }

  VectorArray apply(const VectorArray &u, const Parameter &mu) const override
  {
    ++applies;
    return inner_->apply(u, mu);
  }

  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u, const Parameter &mu) const override
  {
    ++jacobians;
    return inner_->jacobian(u, mu);
  }

  Restriction restricted(std::span<const Index> dofs) const override { return inner_->restricted(dofs); }

  mutable std::atomic<long> applies{0};
  mutable std::atomic<long> jacobians{0};

private:
  std::shared_ptr<const Operator> inner_;
};

std::string errors_text(double c, double phi)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "c %.3e, phi %.3e", c, phi);
  return buf;
}

} // namespace

ConformanceReport substitutability_check(const InstationaryDiscretization &detailed, const DofLayout &layout,
                                         const Parameter &mu, double tol)
{
  ConformanceReport r;
  const Index n = layout.cells();
  auto counting = std::make_shared<CountingOperator>(detailed.space_operator());
  const InstationaryDiscretization traced =
    detailed.with_operators(counting, detailed.mass(), detailed.initial_guess());

  const Trajectory reference = traced.solve(mu);
  r.add("detailed solve through implicit_euler", reference.states.size() == detailed.steps() + 1 &&
                                                   counting->applies > 0 && counting->jacobians > 0);

  // complete orthonormal field bases
  Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(n, n) / std::sqrt(layout.cell_volume());
  const ReducedBasis complete{VectorArray(layout.field_space(), unit), VectorArray(layout.field_space(), unit)};

  const long applies_before = counting->applies;
  const ReducedModel galerkin = reduce(traced, layout, complete);
  const Trajectory g = reconstruct(galerkin.discretization.solve(mu), galerkin.block_basis);
  const double gc = error_linfty_l2(reference, g, layout, Field::Concentration);
  const double gp = error_linfty_l2(reference, g, layout, Field::Potential);
  r.add("Galerkin model on a complete basis reproduces the detailed solution", gc <= tol && gp <= tol,
        errors_text(gc, gp));
  r.add("Galerkin model evaluates the detailed operator", counting->applies > applies_before);

  const VectorArray unit_vectors(layout.product_space(), Eigen::MatrixXd::Identity(2 * n, 2 * n));
  EIData ei = ei_greedy(unit_vectors, 2 * n);
  r.add("interpolation of the unit vectors selects every DOF", ei.size() == 2 * n);
  const ReducedModel interpolated = reduce(traced, layout, complete, &ei);
  const long applies_ei = counting->applies;
  const long jacobians_ei = counting->jacobians;
  const Trajectory e = reconstruct(interpolated.discretization.solve(mu), interpolated.block_basis);
  const double ec = error_linfty_l2(reference, e, layout, Field::Concentration);
  const double ep = error_linfty_l2(reference, e, layout, Field::Potential);
  r.add("interpolated model with complete interpolation reproduces the detailed solution", ec <= tol && ep <= tol,
        errors_text(ec, ep));
  r.add("interpolated model never evaluates the full operator",
        counting->applies == applies_ei && counting->jacobians == jacobians_ei);

  r.add("all models share one discretization type and solver",
        galerkin.discretization.steps() == detailed.steps() && interpolated.discretization.dt() == detailed.dt());
  return r;
}

ConformanceReport run_conformance_suite(unsigned seed)
{
  ConformanceReport report;
  std::mt19937_64 rng(seed);

  ExperimentConfig config;
  config.dims = {8, 2, 2};
  config.steps = 2;
  config.geometry_seed = seed;
  const OfflineData model = build_model(config);
  const DofLayout &layout = model.op->layout();

  auto random_array = [&](const VectorSpace &space) {
    return [&rng, space](Index count) {
      VectorArray a(space, count);
      for (Index j = 0; j < count; ++j)
        for (Index i = 0; i < space.dim; ++i)
          a.data()(i, j) = 2.0 * uniform01(rng) - 1.0;
      return a;
    };
  };
  for (const auto &[name, space] :
       {std::pair{"euclidean", VectorSpace::euclidean(7)}, std::pair{"product", layout.product_space()},
        std::pair{"field", layout.field_space()}})
  {
    const auto axioms = vector_array_axioms_check<VectorArray>(random_array(space));
    for (const auto &c : axioms.checks)
      report.add(std::string("vector array (") + name + "): " + c.name, c.passed, c.detail);
  }

  const Parameter mu{0.5 * (config.box.lower.charge_rate + config.box.upper.charge_rate),
                     0.5 * (config.box.lower.temperature + config.box.upper.temperature)};
  for (const auto &c : substitutability_check(*model.detailed, layout, mu).checks)
    report.add("substitutability: " + c.name, c.passed, c.detail);
  return report;
}

} // namespace morcell
