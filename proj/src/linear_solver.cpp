#include "morcell/linear_solver.hpp"

#include <cstdio>
#include <string>
#include <tuple>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "morcell/errors.hpp"

namespace morcell
{

using Index = Eigen::Index;

namespace
{

template <typename Matrix> Eigen::VectorXd row_scaling(const Matrix &a)
{
  Eigen::VectorXd s = Eigen::VectorXd::Ones(a.rows());
  if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Matrix>, Matrix>)
  {
    for (Index r = 0; r < a.outerSize(); ++r)
    {
      double m = 0.0;
      for (typename Matrix::InnerIterator it(a, r); it; ++it)
        m = std::max(m, std::abs(it.value()));
      if (m > 0.0)
        s[r] = 1.0 / m;
    }
  }
  else
  {
    for (Index r = 0; r < a.rows(); ++r)
    {
      const double m = a.row(r).cwiseAbs().maxCoeff();
      if (m > 0.0)
        s[r] = 1.0 / m;
    }
  }
  return s;
}

std::string to_sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Pivot column from Eigen's "... ZERO COLUMN AT <1-based column>" message.
long pivot_from_message(const std::string &msg)
{
  const auto pos = msg.rfind("AT ");
  if (pos == std::string::npos)
    return -1;
  try
  {
    return std::stol(msg.substr(pos + 3)) - 1;
  }
  catch (const std::exception &)
  {
    return -1;
  }
}

template <typename Matrix> double inf_norm(const Matrix &a)
{
  if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Matrix>, Matrix>)
  {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(a.rows());
    for (Index c = 0; c < a.outerSize(); ++c)
      for (typename Matrix::InnerIterator it(a, c); it; ++it)
        rows[it.row()] += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
  }
  else
    return a.rows() ? a.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

template <typename Matrix, typename Solve>
Eigen::MatrixXd checked_solve(const Matrix &a, const Eigen::Ref<const Eigen::MatrixXd> &b,
                              Solve &&solve)
{
  Eigen::MatrixXd x = solve(b);
  const double a_norm = inf_norm(a);
  for (Index col = 0; col < b.cols(); ++col)
  {
    const double bn = b.col(col).lpNorm<Eigen::Infinity>();
    if (bn == 0.0)
    {
      x.col(col).setZero();
      continue;
    }
    auto measure = [&](const Eigen::VectorXd &r) {
      const double scale = a_norm * x.col(col).lpNorm<Eigen::Infinity>() + bn;
      return std::pair{r.norm() / b.col(col).norm(), r.lpNorm<Eigen::Infinity>() / scale};
    };
    Eigen::VectorXd r = b.col(col) - a * x.col(col);
    auto [rel, backward] = measure(r);
    if (rel > linear_solve_tolerance && std::isfinite(rel))
    {
      x.col(col) += solve(r); // one step of iterative refinement
      r = b.col(col) - a * x.col(col);
      std::tie(rel, backward) = measure(r);
    }
    const double growth = a_norm * x.col(col).lpNorm<Eigen::Infinity>() / bn;
    const bool accurate = rel <= linear_solve_tolerance ||
                          (backward <= linear_solve_tolerance && growth <= max_solution_growth);
    if (!accurate || !x.col(col).allFinite())
      throw SingularMatrixError("linear solve failed: relative residual " + to_sci(rel) + ", growth " +
                                  to_sci(growth) + " (matrix numerically singular)",
                                -1);
  }
  return x;
}

} // namespace

Eigen::MatrixXd solve_linear(const Eigen::SparseMatrix<double, Eigen::RowMajor> &a,
                             const Eigen::Ref<const Eigen::MatrixXd> &b)
{
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw ConfigError("solve_linear: dimension mismatch");
  if (a.rows() == 0)
    return Eigen::MatrixXd(0, b.cols());
  const Eigen::VectorXd s = row_scaling(a);
  const Eigen::SparseMatrix<double, Eigen::ColMajor> scaled = s.asDiagonal() * a;

  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(scaled);
  lu.factorize(scaled);
  if (lu.info() != Eigen::Success)
    throw SingularMatrixError("sparse LU failed: " + lu.lastErrorMessage(),
                              pivot_from_message(lu.lastErrorMessage()));

  const Eigen::MatrixXd sb = s.asDiagonal() * b;
  return checked_solve(scaled, sb, [&](const Eigen::MatrixXd &rhs) -> Eigen::MatrixXd {
    return lu.solve(rhs);
  });
}

Eigen::MatrixXd solve_linear(const Eigen::Ref<const Eigen::MatrixXd> &a,
                             const Eigen::Ref<const Eigen::MatrixXd> &b)
{
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw ConfigError("solve_linear: dimension mismatch");
  if (a.rows() == 0)
    return Eigen::MatrixXd(0, b.cols());
  const Eigen::VectorXd s = row_scaling(a);
  const Eigen::MatrixXd scaled = s.asDiagonal() * a;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(scaled);
  const auto diag = lu.matrixLU().diagonal();
  for (Index i = 0; i < diag.size(); ++i)
    if (diag[i] == 0.0)
      throw SingularMatrixError("dense LU: zero pivot in column " + std::to_string(i), i);

  const Eigen::MatrixXd sb = s.asDiagonal() * b;
  return checked_solve(scaled, sb, [&](const Eigen::MatrixXd &rhs) -> Eigen::MatrixXd {
    return lu.solve(rhs);
  });
}

} // namespace morcell
