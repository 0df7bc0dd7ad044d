#ifndef MORCELL_CONFORMANCE_HPP
#define MORCELL_CONFORMANCE_HPP

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "morcell/discretization.hpp"
#include "morcell/fv_operator.hpp"
#include "morcell/vector_array.hpp"

namespace morcell
{

struct CheckResult
{
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ConformanceReport
{
  std::vector<CheckResult> checks;

  bool passed() const
  {
    for (const auto &c : checks)
      if (!c.passed)
        return false;
    return !checks.empty();
  }

  void add(std::string name, bool ok, std::string detail = {})
  {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
};

namespace detail
{

template <VectorArrayLike A> double distance(const A &x, const A &y)
{
  A d = x;
  d.axpy(-1.0, y);
  return d.size() ? d.norms().maxCoeff() : 0.0;
}

inline std::string ratio_text(double value, double bound)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e (bound %.3e)", value, bound);
  return buf;
}

} // namespace detail

/// Axioms the reduction algorithms rely on, checked on arrays produced by
/// `random_array(count)`. Errors are measured relative to the largest norm.
template <VectorArrayLike A>
ConformanceReport vector_array_axioms_check(const std::function<A(Index)> &random_array, double tol = 1e-12)
{
  ConformanceReport r;
  const Index n = 5;
  const A x = random_array(n);
  const A y = random_array(n);
  double scale = std::max(x.norms().maxCoeff(), y.norms().maxCoeff());
  if (!(scale > 0.0))
    scale = 1.0;
  const double bound = tol * scale * scale;

  const A z = x.zeros(3);
  r.add("zeros", z.size() == 3 && z.dim() == x.dim() && z.norms().maxCoeff() == 0.0);

  const A before = x.lincomb(Eigen::MatrixXd::Identity(n, n));
  A copy = x;
  copy.scal(2.0);
  r.add("copy independence", detail::distance(x, before) == 0.0 && detail::distance(copy, x) > 0.0);

  A joined = x;
  joined.append(y);
  r.add("append", joined.size() == 2 * n && detail::distance(joined.slice(0, n), x) == 0.0 &&
                    detail::distance(joined.slice(n, 2 * n), y) == 0.0);

  const A s = x.slice(1, 3);
  const std::vector<Index> all_dofs = [&] {
    std::vector<Index> v(static_cast<std::size_t>(x.dim()));
    for (Index i = 0; i < x.dim(); ++i)
      v[static_cast<std::size_t>(i)] = i;
    return v;
  }();
  r.add("slice", s.size() == 2 && s.dofs(all_dofs) == x.dofs(all_dofs).middleCols(1, 2));

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  r.add("lincomb identity", detail::distance(x.lincomb(identity), x) <= tol * scale);

  Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(n, 3), c2 = Eigen::MatrixXd::Zero(n, 3);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < 3; ++j)
    {
      c1(i, j) = std::sin(1.0 + static_cast<double>(3 * i + j));
      c2(i, j) = std::cos(2.0 + static_cast<double>(i - j));
    }
  {
    A lhs = x.lincomb(0.5 * c1 + c2);
    A rhs = x.lincomb(c1);
    rhs.scal(0.5);
    rhs.axpy(1.0, x.lincomb(c2));
    const double d = detail::distance(lhs, rhs);
    r.add("lincomb linearity", d <= 10 * tol * scale, detail::ratio_text(d, 10 * tol * scale));
  }

  {
    A lhs = x;
    lhs.axpy(-0.75, y);
    A rhs = y;
    rhs.scal(-0.75);
    rhs.axpy(1.0, x);
    const double d = detail::distance(lhs, rhs);
    r.add("axpy commutes with scal", d <= tol * scale, detail::ratio_text(d, tol * scale));
    A single = x;
    single.axpy(2.0, y.slice(0, 1));
    A expected = x;
    Eigen::MatrixXd broadcast = Eigen::MatrixXd::Zero(n, n);
    broadcast.row(0).setConstant(2.0);
    expected.axpy(1.0, y.lincomb(broadcast));
    const double db = detail::distance(single, expected);
    r.add("axpy broadcast", db <= tol * scale, detail::ratio_text(db, tol * scale));
  }

  {
    const Eigen::MatrixXd gxy = x.inner(y);
    const Eigen::MatrixXd gyx = y.inner(x);
    const double sym = (gxy - gyx.transpose()).cwiseAbs().maxCoeff();
    r.add("inner symmetry", sym <= bound, detail::ratio_text(sym, bound));
    const Eigen::MatrixXd lhs = x.lincomb(c1).inner(y);
    const Eigen::MatrixXd rhs = c1.transpose() * gxy;
    const double bil = (lhs - rhs).cwiseAbs().maxCoeff();
    r.add("inner bilinearity", bil <= 10 * n * bound, detail::ratio_text(bil, 10 * n * bound));
    const Eigen::VectorXd norms = x.norms();
    const Eigen::VectorXd diag = x.gramian().diagonal();
    bool ok = (diag.array() >= 0.0).all();
    const double nd = (norms.array().square() - diag.array()).abs().maxCoeff();
    r.add("norms match the Gramian", ok && nd <= bound, detail::ratio_text(nd, bound));
    const Eigen::VectorXd zero_norms = x.zeros(2).norms();
    r.add("positive definiteness", (norms.array() > 0.0).all() && zero_norms.maxCoeff() == 0.0);
  }

  {
    const std::vector<Index> dofs{0, x.dim() - 1, x.dim() / 2};
    const Eigen::MatrixXd lhs = x.lincomb(c1).dofs(dofs);
    const Eigen::MatrixXd rhs = x.dofs(dofs) * c1;
    const double d = (lhs - rhs).cwiseAbs().maxCoeff();
    r.add("dofs commute with lincomb", d <= 10 * tol * scale, detail::ratio_text(d, 10 * tol * scale));
  }
  return r;
}

/// Solves a small problem with the detailed model and with its Galerkin and
/// interpolated reductions onto complete bases, all through implicit_euler. A
/// complete basis makes the reductions exact, so all three trajectories agree.
ConformanceReport substitutability_check(const InstationaryDiscretization &detailed, const DofLayout &layout,
                                         const Parameter &mu, double tol = 1e-7);

/// The default check problem: an 8x2x2 cell with two time steps.
ConformanceReport run_conformance_suite(unsigned seed = 1);

} // namespace morcell

#endif // MORCELL_CONFORMANCE_HPP
