#include <doctest.h>

#include <cmath>
#include <random>

#include "morcell/errors.hpp"
#include "morcell/experiment.hpp"
#include "morcell/metrics.hpp"
#include "morcell/reduction.hpp"
#include "support.hpp"

using namespace morcell;

namespace
{

VectorArray random_array(const VectorSpace &space, Index count, std::mt19937_64 &rng)
{
  VectorArray a(space, count);
  for (Index j = 0; j < count; ++j)
    for (Index i = 0; i < space.dim; ++i)
      a.data()(i, j) = 2.0 * uniform01(rng) - 1.0;
  return a;
}

double max_abs(const Eigen::MatrixXd &m)
{
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

struct SmallProblem
{
  std::shared_ptr<BatterySpaceOperator> op;
  InstationaryDiscretization detailed;
};

SmallProblem small_problem(Index steps = 4)
{
  auto op = std::make_shared<BatterySpaceOperator>(morcell::testing::small_cell({8, 3, 3}, 21));
  return {op, discretize(op, steps, 30.0)};
}

} // namespace

TEST_CASE("POD of a single vector")
{
  const VectorSpace space = VectorSpace::weighted(Eigen::VectorXd::Constant(6, 0.25));
  const VectorArray v(space, Eigen::MatrixXd(Eigen::VectorXd::LinSpaced(6, 1.0, 6.0)));
  const PodResult p = pod(v, 3);
  REQUIRE(p.modes.size() == 1);
  CHECK(p.rank_limited);
  CHECK(p.singular_values[0] == doctest::Approx(v.norms()[0]).epsilon(1e-14));
  VectorArray expected = v;
  expected.scal(1.0 / v.norms()[0]);
  CHECK(max_abs(p.modes.data().cwiseAbs() - expected.data().cwiseAbs()) <= 1e-14);
}

TEST_CASE("POD of two copies has rank one")
{
  std::mt19937_64 rng(1);
  VectorArray v = random_array(VectorSpace::euclidean(8), 1, rng);
  v.append(v);
  const PodResult p = pod(v, 2);
  CHECK(p.modes.size() == 1);
  CHECK(p.singular_values[0] == doctest::Approx(std::sqrt(2.0) * v.norms()[0]).epsilon(1e-14));
  CHECK_THROWS_AS(pod(VectorArray(VectorSpace::euclidean(3)), 1), ConfigError);
}

TEST_CASE("POD matches a dense SVD in the weighted product")
{
  std::mt19937_64 rng(2);
  const Eigen::VectorXd weights = Eigen::VectorXd::LinSpaced(15, 0.5, 4.0);
  const VectorSpace space = VectorSpace::weighted(weights);
  const VectorArray s = random_array(space, 5, rng);
  const PodResult p = pod(s, 5);
  REQUIRE(p.modes.size() == 5);

  const Eigen::MatrixXd scaled = weights.cwiseSqrt().asDiagonal() * s.data();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU);
  CHECK(max_abs(p.singular_values - svd.singularValues()) <= 1e-12 * svd.singularValues()[0]);
  // modes agree up to sign
  const Eigen::MatrixXd oracle = weights.cwiseSqrt().cwiseInverse().asDiagonal() * svd.matrixU();
  for (Index i = 0; i < 5; ++i)
    CHECK(std::abs(std::abs(p.modes.inner(VectorArray(space, Eigen::MatrixXd(oracle.col(i))))(i, 0)) - 1.0) <= 1e-10);

  // sum_i sigma_i mode_i <mode_i, . > reproduces every snapshot
  const Eigen::MatrixXd coefficients = p.modes.inner(s);
  CHECK(max_abs(p.modes.lincomb(coefficients).data() - s.data()) <= 1e-8 * max_abs(s.data()));
  CHECK(max_abs(p.modes.gramian() - Eigen::MatrixXd::Identity(5, 5)) <= 1e-12);
}

TEST_CASE("first POD mode is optimal at rank one")
{
  std::mt19937_64 rng(3);
  const VectorSpace space = VectorSpace::euclidean(10);
  const VectorArray s = random_array(space, 7, rng);
  const PodResult p = pod(s, 1);
  const double best = p.modes.inner(s).squaredNorm();
  CHECK(best == doctest::Approx(p.singular_values[0] * p.singular_values[0]).epsilon(1e-12));
  for (int trial = 0; trial < 50; ++trial)
  {
    VectorArray w = random_array(space, 1, rng);
    w.scal(1.0 / w.norms()[0]);
    CHECK(w.inner(s).squaredNorm() <= best * (1.0 + 1e-12));
  }
}

TEST_CASE("Gram-Schmidt")
{
  std::mt19937_64 rng(4);
  const VectorSpace space = VectorSpace::weighted(Eigen::VectorXd::LinSpaced(12, 0.1, 1.0));

  SUBCASE("orthonormal input is unchanged")
  {
    const VectorArray q = gram_schmidt(random_array(space, 4, rng));
    CHECK(max_abs(gram_schmidt(q).data() - q.data()) <= 1e-12);
  }
  SUBCASE("dependent pair")
  {
    VectorArray v = random_array(space, 1, rng);
    VectorArray pair = v;
    VectorArray twice = v;
    twice.scal(2.0);
    pair.append(twice);
    const VectorArray q = gram_schmidt(pair);
    REQUIRE(q.size() == 1);
    CHECK(max_abs(q.data() - v.data() / v.norms()[0]) <= 1e-14);
  }
  SUBCASE("random vectors")
  {
    const VectorArray q = gram_schmidt(random_array(space, 10, rng));
    REQUIRE(q.size() == 10);
    CHECK(max_abs(q.gramian() - Eigen::MatrixXd::Identity(10, 10)) <= 1e-10);
  }
  SUBCASE("offset keeps the leading vectors")
  {
    const VectorArray q = gram_schmidt(random_array(space, 3, rng));
    VectorArray more = q;
    more.append(random_array(space, 2, rng));
    const VectorArray r = gram_schmidt(more, 3);
    CHECK(r.slice(0, 3).data() == q.data());
    CHECK(max_abs(r.gramian() - Eigen::MatrixXd::Identity(5, 5)) <= 1e-12);
    CHECK_THROWS_AS(gram_schmidt(more, 9), ConfigError);
  }
}

TEST_CASE("interpolation of a single snapshot")
{
  std::mt19937_64 rng(5);
  const VectorArray s = random_array(VectorSpace::euclidean(9), 1, rng);
  const EIData ei = ei_greedy(s, 4);
  CHECK(ei.size() == 1);
  const Eigen::MatrixXd values = s.dofs(ei.interpolation_dofs);
  CHECK(max_abs(interpolate(ei, values).data() - s.data()) <= 1e-15 * max_abs(s.data()));
  CHECK(ei.relative_residual == 0.0);
}

TEST_CASE("interpolation of a low-rank snapshot set")
{
  std::mt19937_64 rng(6);
  const VectorSpace space = VectorSpace::euclidean(30);
  const VectorArray basis = random_array(space, 4, rng);
  Eigen::MatrixXd c(4, 25);
  for (Index i = 0; i < c.size(); ++i)
    c.data()[i] = 2.0 * uniform01(rng) - 1.0;
  const VectorArray s = basis.lincomb(c);
  const EIData ei = ei_greedy(s, 10);
  CHECK(ei.size() == 4);
  CHECK(ei.max_errors.back() <= 1e-12 * ei.max_errors.front());
  CHECK(max_abs(interpolate(ei, s.dofs(ei.interpolation_dofs)).data() - s.data()) <= 1e-11 * max_abs(s.data()));

  // unit lower triangular interpolation matrix
  const Eigen::MatrixXd &b = ei.interpolation_matrix;
  for (Index i = 0; i < 4; ++i)
  {
    CHECK(b(i, i) == 1.0);
    for (Index j = i + 1; j < 4; ++j)
      CHECK(b(i, j) == 0.0);
  }
  // every residual is interpolated exactly at the chosen DOFs
  for (Index j = 0; j < 4; ++j)
    CHECK(ei.collateral_basis.dofs(ei.interpolation_dofs)(j, j) == 1.0);
}

TEST_CASE("interpolation truncation keeps a valid prefix")
{
  std::mt19937_64 rng(7);
  const VectorArray s = random_array(VectorSpace::euclidean(20), 8, rng);
  const EIData ei = ei_greedy(s, 6);
  const EIData t = ei.truncated(3);
  CHECK(t.size() == 3);
  CHECK(t.interpolation_matrix == ei.interpolation_matrix.topLeftCorner(3, 3));
  CHECK(t.relative_residual == doctest::Approx(ei.max_errors[3] / ei.max_errors[0]));
  CHECK(t.source_dofs.empty());
}

TEST_CASE("scaled interpolation keeps unit values at the interpolation DOFs")
{
  std::mt19937_64 rng(8);
  const VectorArray s = random_array(VectorSpace::euclidean(10), 5, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(10, 1.0, 100.0);
  const EIData ei = ei_greedy(s, 5, 0.0, &w);
  REQUIRE(ei.size() == 5);
  for (Index j = 0; j < 5; ++j)
    CHECK(ei.collateral_basis.dofs(ei.interpolation_dofs)(j, j) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(max_abs(interpolate(ei, s.dofs(ei.interpolation_dofs)).data() - s.data()) <= 1e-12 * max_abs(s.data()));
  const Eigen::VectorXd bad = -w;
  CHECK_THROWS_AS(ei_greedy(s, 5, 0.0, &bad), ConfigError);
}

TEST_CASE("block scaling")
{
  const DofLayout layout(3, 2.0);
  Eigen::MatrixXd m(6, 2);
  m << 1, -4, 2, 0, 0, 0, 10, 0, 0, 0, -20, 5;
  const Eigen::VectorXd w = block_scaling(VectorArray(layout.product_space(), m), layout);
  CHECK(w.head(3) == Eigen::VectorXd::Constant(3, 0.25));
  CHECK(w.tail(3) == Eigen::VectorXd::Constant(3, 0.05));
}

TEST_CASE("reconstruction")
{
  const DofLayout layout(5, 0.5);
  std::mt19937_64 rng(9);
  const VectorArray v = gram_schmidt(random_array(layout.product_space(), 3, rng));
  Trajectory coefficients;
  coefficients.states = VectorArray(VectorSpace::euclidean(3), Eigen::MatrixXd(Eigen::Vector3d::UnitX()));
  CHECK(max_abs(reconstruct(coefficients, v).states.data() - v.data().col(0)) == 0.0);

  Trajectory member;
  member.states = v.slice(1, 2);
  CHECK(max_abs(reconstruct(project_trajectory(member, v), v).states.data() - member.states.data()) <= 1e-14);

  Trajectory random;
  random.states = random_array(VectorSpace::euclidean(3), 4, rng);
  const Trajectory full = reconstruct(random, v);
  for (Index s = 0; s < 4; ++s)
    CHECK(full.states.norms()[s] == doctest::Approx(random.states.data().col(s).norm()).epsilon(1e-13));

  coefficients.states = VectorArray(VectorSpace::euclidean(2), 1);
  CHECK_THROWS_AS(reconstruct(coefficients, v), ConfigError);
}

TEST_CASE("Galerkin model on the trajectory's own span reproduces it")
{
  const SmallProblem p = small_problem();
  const DofLayout &layout = p.op->layout();
  const Parameter mu{7e-4, 290.0};
  const Trajectory t = p.detailed.solve(mu);
  const ReducedBasis basis{gram_schmidt(layout.field(t.states, Field::Concentration)),
                           gram_schmidt(layout.field(t.states, Field::Potential))};
  const ReducedModel m = reduce(p.detailed, layout, basis);
  const Trajectory r = reconstruct(m.discretization.solve(mu), m.block_basis);
  CHECK(error_linfty_l2(t, r, layout, Field::Concentration) <= 1e-6);
  CHECK(error_linfty_l2(t, r, layout, Field::Potential) <= 1e-6);
}

TEST_CASE("empty basis gives the zero trajectory")
{
  const SmallProblem p = small_problem(2);
  const DofLayout &layout = p.op->layout();
  const ReducedBasis empty{VectorArray(layout.field_space()), VectorArray(layout.field_space())};
  const ReducedModel m = reduce(p.detailed, layout, empty);
  const Trajectory r = reconstruct(m.discretization.solve({5e-4, 298.0}), m.block_basis);
  CHECK(r.states.size() == 3);
  CHECK(r.states.dim() == layout.size());
  CHECK(max_abs(r.states.data()) == 0.0);
}

TEST_CASE("POD-Greedy on a small problem")
{
  const SmallProblem p = small_problem();
  const DofLayout &layout = p.op->layout();
  const auto training = training_parameters(ParameterBox{}, 3, 3);
  std::vector<Trajectory> trajectories;
  for (const auto &mu : training)
    trajectories.push_back(p.detailed.solve(mu));

  SUBCASE("a single training parameter is selected first")
  {
    const std::vector<Parameter> one{training[4]};
    const std::vector<Trajectory> traj{trajectories[4]};
    const PodGreedyResult r = pod_greedy(p.detailed, layout, one, traj, {2, 0.0, 1});
    CHECK(r.log.records.front().selected == 0);
    CHECK(r.log.records.front().mu == training[4]);
    CHECK(r.basis.c.size() == 2);
  }
  SUBCASE("target size and decreasing error at the selected parameter")
  {
    const PodGreedyResult r = pod_greedy(p.detailed, layout, training, trajectories, {8, 0.0, 1});
    CHECK(r.basis.c.size() == 8);
    CHECK(r.basis.phi.size() == 8);
    CHECK(max_abs(r.basis.c.gramian() - Eigen::MatrixXd::Identity(8, 8)) <= 1e-10);
    CHECK(max_abs(r.basis.phi.gramian() - Eigen::MatrixXd::Identity(8, 8)) <= 1e-10);
    const auto &log = r.log;
    REQUIRE(log.records.size() == 9);
    for (std::size_t k = 1; k + 1 < log.records.size(); ++k)
    {
      const auto chosen = static_cast<std::size_t>(log.records[k].selected);
      CHECK(log.errors[k + 1][chosen] < log.errors[k][chosen]);
    }
    CHECK(log.records.back().max_error < log.records[1].max_error);
  }
  SUBCASE("inconsistent input")
  {
    const std::vector<Trajectory> none;
    CHECK_THROWS_AS(pod_greedy(p.detailed, layout, training, none, {}), ConfigError);
    CHECK_THROWS_AS(pod_greedy(p.detailed, layout, {}, none, {}), ConfigError);
  }
}

TEST_CASE("operator snapshots at solved and projected states")
{
  const SmallProblem p = small_problem(2);
  const DofLayout &layout = p.op->layout();
  const Trajectory t = p.detailed.solve({5e-4, 298.0});
  const VectorArray plain = operator_snapshots(*p.op, {t});
  CHECK(plain.size() == 3);
  const ReducedBasis basis{gram_schmidt(layout.field(t.states, Field::Concentration)).slice(0, 1),
                           gram_schmidt(layout.field(t.states, Field::Potential)).slice(0, 1)};
  const VectorArray v = basis.block(layout);
  const VectorArray both = operator_snapshots(*p.op, {t}, &v);
  CHECK(both.size() == 6);
  CHECK(both.slice(0, 3).data() == plain.data());
  // solved states satisfy the algebraic rows, their projections do not
  const double solved = max_abs(plain.data().bottomRows(layout.cells()).rightCols(2));
  const double projected = max_abs(both.data().bottomRows(layout.cells()).rightCols(2));
  CHECK(solved <= 1e-4 * projected);
}

TEST_CASE("Jacobian snapshots and column normalization")
{
  const SmallProblem p = small_problem(1);
  const DofLayout &layout = p.op->layout();
  const Trajectory t = p.detailed.solve({5e-4, 298.0});
  const ReducedBasis basis{gram_schmidt(layout.field(t.states, Field::Concentration)),
                           gram_schmidt(layout.field(t.states, Field::Potential))};
  const VectorArray v = basis.block(layout);
  VectorArray j = jacobian_snapshots(*p.op, {t}, v);
  REQUIRE(j.size() == 2 * v.size());
  const auto jac = p.op->jacobian(t.states.at(1), t.mu);
  CHECK(j.slice(v.size(), 2 * v.size()).data() == jac->apply(v).data());

  const Eigen::VectorXd w = block_scaling(j, layout);
  normalize_columns(j, w);
  for (Index c = 0; c < j.size(); ++c)
    CHECK(w.cwiseProduct(j.data().col(c)).cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-15));
  VectorArray zero(layout.product_space(), 1);
  normalize_columns(zero, w);
  CHECK(max_abs(zero.data()) == 0.0);
}

TEST_CASE("affine splitting of the cell operator")
{
  const auto op = std::make_shared<BatterySpaceOperator>(morcell::testing::small_cell({6, 4, 4}, 3));
  const auto split = op->affine_splitting();
  REQUIRE(split);
  CHECK_FALSE(split->remainder->affine_splitting());
  std::mt19937_64 rng(10);
  for (const Parameter mu : {Parameter{1e-4, 250.0}, Parameter{7e-4, 301.5}, Parameter{1e-3, 350.0}})
  {
    const VectorArray u(op->layout().product_space(), Eigen::MatrixXd(morcell::testing::random_state(*op, rng, mu)));
    const VectorArray full = op->apply(u, mu);
    VectorArray sum = split->affine->apply(u, mu);
    sum.axpy(1.0, split->remainder->apply(u, mu));
    CHECK(max_abs(sum.data() - full.data()) <= 1e-12 * max_abs(full.data()));
    const Eigen::MatrixXd jsum =
      split->affine->jacobian(u, mu)->to_dense() + split->remainder->jacobian(u, mu)->to_dense();
    const Eigen::MatrixXd jfull = op->jacobian(u, mu)->to_dense();
    CHECK(max_abs(jsum - jfull) <= 1e-12 * max_abs(jfull));
  }
  // the affine part does not depend on the state beyond its linear term
  const VectorArray zero(op->layout().product_space(), 1);
  const Parameter mu{6e-4, 280.0};
  CHECK(max_abs(split->affine->apply(zero, mu).data() - op->part(BatterySpaceOperator::Terms::Affine)->apply(zero, mu).data()) <= 1e-15);
  const auto target = interpolation_target(op);
  const VectorArray u(op->layout().product_space(), Eigen::MatrixXd(morcell::testing::random_state(*op, rng, mu)));
  CHECK(target->apply(u, mu).data() == split->remainder->apply(u, mu).data());
  CHECK(interpolation_target(split->remainder) == split->remainder);
}

TEST_CASE("interpolated reduction projects the affine part exactly")
{
  const SmallProblem p = small_problem(2);
  const DofLayout &layout = p.op->layout();
  const Parameter mu{4e-4, 310.0};
  const Trajectory t = p.detailed.solve(mu);
  const ReducedBasis basis{gram_schmidt(layout.field(t.states, Field::Concentration)),
                           gram_schmidt(layout.field(t.states, Field::Potential))};
  const VectorArray v = basis.block(layout);
  // complete interpolation of the remainder: the interpolated model equals the Galerkin one
  const Index n = layout.size();
  EIData ei = ei_greedy(VectorArray(layout.product_space(), Eigen::MatrixXd::Identity(n, n)), n);
  const ReducedModel g = reduce(p.detailed, layout, basis);
  const ReducedModel e = reduce(p.detailed, layout, basis, &ei);
  std::mt19937_64 rng(11);
  const VectorArray a(VectorSpace::euclidean(v.size()),
                      v.inner(VectorArray(layout.product_space(), Eigen::MatrixXd(morcell::testing::random_state(*p.op, rng, mu)))));
  const Eigen::MatrixXd ga = g.discretization.space_operator()->apply(a, mu).data();
  const Eigen::MatrixXd ea = e.discretization.space_operator()->apply(a, mu).data();
  // ga is a small difference of large terms: bound the rounding by |J| |u|
  const VectorArray u = v.lincomb(a.data());
  const SparseMatrix j = p.op->assemble_jacobian(u.data().col(0), mu);
  const Eigen::VectorXd magnitude = j.cwiseAbs() * u.data().col(0).cwiseAbs();
  // |<v_i, f>| <= ||f|| <= max|f| |Omega|^(1/2)
  const double scale = magnitude.maxCoeff() * std::sqrt(layout.cell_volume() * static_cast<double>(layout.cells()));
  CHECK(max_abs(ga - ea) <= 1e-12 * scale);
  const Eigen::MatrixXd gj = g.discretization.space_operator()->jacobian(a, mu)->to_dense();
  const Eigen::MatrixXd ej = e.discretization.space_operator()->jacobian(a, mu)->to_dense();
  CHECK(max_abs(gj - ej) <= 1e-10 * max_abs(gj));
}
