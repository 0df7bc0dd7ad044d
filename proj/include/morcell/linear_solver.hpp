#ifndef MORCELL_LINEAR_SOLVER_HPP
#define MORCELL_LINEAR_SOLVER_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace morcell
{

/// Required relative residual ||Ax - b|| / ||b|| of the direct solvers. Systems
/// whose solution is too large for that to be representable are accepted when
/// the normwise backward error ||Ax - b|| / (||A|| ||x|| + ||b||) meets it and
/// ||A|| ||x|| / ||b|| stays below max_solution_growth.
inline constexpr double linear_solve_tolerance = 1e-10;
inline constexpr double max_solution_growth = 1e12;

/// Direct sparse LU solve of A X = B (COLAMD ordering, partial pivoting), one
/// right-hand side per column. Rows are equilibrated by their max-norm before
/// factorization. Throws SingularMatrixError with the failing column when a zero
/// pivot is met or the accuracy check fails.
Eigen::MatrixXd solve_linear(const Eigen::SparseMatrix<double, Eigen::RowMajor> &a,
                             const Eigen::Ref<const Eigen::MatrixXd> &b);

/// Dense counterpart of solve_linear (partial-pivoting LU).
Eigen::MatrixXd solve_linear(const Eigen::Ref<const Eigen::MatrixXd> &a,
                             const Eigen::Ref<const Eigen::MatrixXd> &b);

} // namespace morcell

#endif // MORCELL_LINEAR_SOLVER_HPP
