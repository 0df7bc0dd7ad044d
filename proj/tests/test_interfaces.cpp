#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "morcell/conformance.hpp"
#include "morcell/errors.hpp"
#include "morcell/operators.hpp"
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

Eigen::MatrixXd laplacian(Index n)
{
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
  {
    a(i, i) = 2.0;
    if (i > 0)
      a(i, i - 1) = -1.0;
    if (i + 1 < n)
      a(i, i + 1) = -1.0;
  }
  return a;
}

} // namespace

TEST_CASE("projection of the identity is the identity on coefficients")
{
  std::mt19937_64 rng(1);
  const VectorSpace space = VectorSpace::weighted(Eigen::VectorXd::LinSpaced(12, 0.5, 2.0));
  const VectorArray v = gram_schmidt(random_array(space, 4, rng));
  REQUIRE(v.size() == 4);
  auto id = MatrixOperator::identity(space, true);
  auto p = project(id, v, v);
  CHECK(p->linear());
  const Eigen::MatrixXd m = std::dynamic_pointer_cast<const MatrixOperator>(p)->to_dense();
  CHECK(max_abs(m - Eigen::MatrixXd::Identity(4, 4)) <= 1e-12);
}

TEST_CASE("Laplacian projected onto its lowest eigenvectors")
{
  const Index n = 10;
  const VectorSpace space = VectorSpace::euclidean(n);
  Eigen::MatrixXd modes(n, 2);
  for (Index k = 1; k <= 2; ++k)
    for (Index j = 1; j <= n; ++j)
      modes(j - 1, k - 1) = std::sin(static_cast<double>(j * k) * std::numbers::pi / 11.0);
  modes.colwise().normalize();
  const VectorArray v(space, modes);
  auto a = std::make_shared<const MatrixOperator>(SparseMatrix(laplacian(n).sparseView()), space);
  const Eigen::MatrixXd m = std::dynamic_pointer_cast<const MatrixOperator>(project(a, v, v))->to_dense();
  CHECK(m(0, 0) == doctest::Approx(2.0 - 2.0 * std::cos(std::numbers::pi / 11.0)).epsilon(1e-13));
  CHECK(m(1, 1) == doctest::Approx(2.0 - 2.0 * std::cos(2.0 * std::numbers::pi / 11.0)).epsilon(1e-13));
  CHECK(std::abs(m(0, 1)) <= 1e-14);
  CHECK(std::abs(m(1, 0)) <= 1e-14);
}

TEST_CASE("projected nonlinear operator equals the detailed path")
{
  auto op = std::make_shared<BatterySpaceOperator>(morcell::testing::small_cell());
  const DofLayout &layout = op->layout();
  std::mt19937_64 rng(2);
  VectorArray states(layout.product_space());
  for (int i = 0; i < 6; ++i)
    states.append(VectorArray(layout.product_space(), Eigen::MatrixXd(morcell::testing::random_state(*op, rng))));
  const VectorArray v = gram_schmidt(states);
  const ProjectedOperator p(op, v, v);
  const Parameter mu{4e-4, 300.0};
  const VectorArray a(p.source_space(), v.inner(states.slice(0, 2)));
  const Eigen::MatrixXd direct = v.inner(op->apply(v.lincomb(a.data()), mu));
  const Eigen::MatrixXd projected = p.apply(a, mu).data();
  CHECK(max_abs(direct - projected) <= 1e-12 * max_abs(direct));

  const Eigen::MatrixXd j = p.jacobian(a.slice(0, 1), mu)->to_dense();
  const Eigen::MatrixXd jd = v.inner(op->jacobian(v.lincomb(a.slice(0, 1).data()), mu)->apply(v));
  CHECK(max_abs(j - jd) <= 1e-12 * max_abs(jd));
}

TEST_CASE("complete interpolation reproduces the projected operator")
{
  auto op = std::make_shared<BatterySpaceOperator>(morcell::testing::small_cell());
  const DofLayout &layout = op->layout();
  const Index n = layout.size();
  std::mt19937_64 rng(3);
  VectorArray states(layout.product_space());
  for (int i = 0; i < 4; ++i)
    states.append(VectorArray(layout.product_space(), Eigen::MatrixXd(morcell::testing::random_state(*op, rng))));
  const VectorArray v = gram_schmidt(states);
  EIData ei = ei_greedy(VectorArray(layout.product_space(), Eigen::MatrixXd::Identity(n, n)), n);
  REQUIRE(ei.size() == n);
  auto e = make_ei_operator(*op, ei, v, v);
  CHECK(e->restriction().source_dofs.size() == static_cast<std::size_t>(n));
  const ProjectedOperator p(op, v, v);
  const Parameter mu{9e-4, 260.0};
  const VectorArray a(p.source_space(), v.inner(states));
  const Eigen::MatrixXd pe = e->apply(a, mu).data();
  const Eigen::MatrixXd pp = p.apply(a, mu).data();
  CHECK(max_abs(pe - pp) <= 1e-12 * max_abs(pp));
  const Eigen::MatrixXd je = e->jacobian(a.slice(0, 1), mu)->to_dense();
  const Eigen::MatrixXd jp = p.jacobian(a.slice(0, 1), mu)->to_dense();
  CHECK(max_abs(je - jp) <= 1e-12 * max_abs(jp));
}

TEST_CASE("interpolation is exact when the evaluation lies in the collateral span")
{
  auto op = std::make_shared<BatterySpaceOperator>(morcell::testing::small_cell());
  const DofLayout &layout = op->layout();
  std::mt19937_64 rng(4);
  VectorArray states(layout.product_space());
  for (int i = 0; i < 5; ++i)
    states.append(VectorArray(layout.product_space(), Eigen::MatrixXd(morcell::testing::random_state(*op, rng))));
  const VectorArray v = gram_schmidt(states);
  const Parameter mu{2e-4, 330.0};
  // snapshots are evaluations at states of span(v), so those inputs are interpolated exactly
  const VectorArray snapshots = op->apply(v.lincomb(v.inner(states)), mu);
  EIData ei = ei_greedy(snapshots, snapshots.size());
  REQUIRE(ei.size() == snapshots.size());
  auto e = make_ei_operator(*op, ei, v, v);
  const ProjectedOperator p(op, v, v);
  const VectorArray a(p.source_space(), v.inner(states));
  const Eigen::MatrixXd pp = p.apply(a, mu).data();
  CHECK(max_abs(e->apply(a, mu).data() - pp) <= 1e-10 * max_abs(pp));
  CHECK(static_cast<Index>(e->restriction().source_dofs.size()) <= 14 * ei.size());
}

TEST_CASE("reduced dimension zero")
{
  auto op = std::make_shared<BatterySpaceOperator>(morcell::testing::small_cell());
  const DofLayout &layout = op->layout();
  const VectorArray empty(layout.product_space());
  EIData ei = ei_greedy(VectorArray(layout.product_space(), Eigen::MatrixXd::Identity(layout.size(), 3)), 3);
  auto e = make_ei_operator(*op, ei, empty, empty);
  const VectorArray a(e->source_space(), 1);
  CHECK(e->apply(a, {}).dim() == 0);
  CHECK(e->apply(a, {}).size() == 1);
  const ProjectedOperator p(op, empty, empty);
  CHECK(p.apply(a, {}).dim() == 0);
}

TEST_CASE("interpolation data must match the operator")
{
  auto op = std::make_shared<BatterySpaceOperator>(morcell::testing::small_cell());
  EIData ei = ei_greedy(VectorArray(VectorSpace::euclidean(7), Eigen::MatrixXd::Identity(7, 2)), 2);
  const VectorArray v(op->layout().product_space());
  CHECK_THROWS_AS(make_ei_operator(*op, ei, v, v), ConfigError);
}

TEST_CASE("reference vector array satisfies the axioms")
{
  std::mt19937_64 rng(5);
  for (const VectorSpace &space : {VectorSpace::euclidean(9), VectorSpace::weighted(Eigen::VectorXd::Constant(9, 1e-6))})
  {
    const auto report = vector_array_axioms_check<VectorArray>(
      [&](Index count) { return random_array(space, count, rng); });
    for (const auto &c : report.checks)
    {
      INFO(c.name << " " << c.detail);
      CHECK(c.passed);
    }
    CHECK(report.checks.size() == 13);
  }
}

TEST_CASE("lincomb with unit coefficients picks a vector")
{
  std::mt19937_64 rng(6);
  const VectorArray x = random_array(VectorSpace::euclidean(5), 2, rng);
  Eigen::Vector2d c(1.0, 0.0);
  CHECK(x.lincomb(c).data().col(0) == x.data().col(0));
}

TEST_CASE("Gramian of an orthonormalized set is the identity")
{
  std::mt19937_64 rng(7);
  const VectorSpace space = VectorSpace::weighted(Eigen::VectorXd::LinSpaced(20, 0.1, 3.0));
  const VectorArray q = gram_schmidt(random_array(space, 6, rng));
  CHECK(max_abs(q.gramian() - Eigen::MatrixXd::Identity(6, 6)) <= 1e-12);
}

TEST_CASE("vector array basics")
{
  const VectorSpace space = VectorSpace::weighted(Eigen::Vector3d(1.0, 2.0, 3.0));
  VectorArray a(space, Eigen::MatrixXd(Eigen::Matrix3d::Identity()));
  CHECK(a.norms()[2] == doctest::Approx(std::sqrt(3.0)));
  CHECK(a.sup_norms()[1] == 1.0);
  const std::vector<Index> dofs{2, 0};
  CHECK(a.dofs(dofs)(0, 2) == 1.0);
  CHECK(a.dofs(dofs)(1, 0) == 1.0);
  VectorArray b(VectorSpace::euclidean(4), 1);
  CHECK_THROWS_AS(a.append(b), ConfigError);
  CHECK_THROWS_AS(a.axpy(1.0, b), ConfigError);
  CHECK_THROWS_AS((void)a.slice(2, 5), ConfigError);
  a.append(a);
  REQUIRE(a.size() == 6);
  CHECK(a.slice(3, 6).data() == a.slice(0, 3).data());
}

TEST_CASE("parametric vectors combine their components")
{
  const VectorSpace space = VectorSpace::euclidean(2);
  const ParametricVector p(VectorArray(space, Eigen::MatrixXd(Eigen::Matrix2d::Identity())),
                           [](const Parameter &mu) { return Eigen::Vector2d(mu.charge_rate, mu.temperature); });
  const VectorArray v = p.evaluate({3.0, 4.0});
  CHECK(v.data()(0, 0) == 3.0);
  CHECK(v.data()(1, 0) == 4.0);
  CHECK(ParametricVector::constant(v).evaluate({}).data() == v.data());
}

TEST_CASE("matrix operator algebra")
{
  const VectorSpace space = VectorSpace::euclidean(3);
  Eigen::Matrix3d m;
  m << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  auto a = std::make_shared<const MatrixOperator>(SparseMatrix(Eigen::MatrixXd(m).sparseView()), space);
  auto id = MatrixOperator::identity(space, true);
  const std::shared_ptr<const MatrixOperator> ops[] = {a, id};
  const double coefficients[] = {2.0, -1.0};
  const auto c = MatrixOperator::lincomb(ops, coefficients);
  CHECK(c->is_sparse());
  CHECK(max_abs(c->to_dense() - (2.0 * m - Eigen::Matrix3d::Identity())) == 0.0);
  const VectorArray b(space, Eigen::MatrixXd(Eigen::Vector3d(1.0, 2.0, 3.0)));
  CHECK(max_abs(a->apply(a->apply_inverse(b)).data() - b.data()) <= 1e-13);

  const LincombOperator l({a, id}, {2.0, -1.0});
  CHECK(l.linear());
  CHECK(max_abs(l.jacobian(b, {})->to_dense() - c->to_dense()) == 0.0);
}

TEST_CASE("the conformance suite passes")
{
  const ConformanceReport r = run_conformance_suite(3);
  for (const auto &c : r.checks)
  {
    INFO(c.name << " " << c.detail);
    CHECK(c.passed);
  }
  CHECK(r.passed());
}
