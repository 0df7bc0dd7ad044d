#ifndef MORCELL_OPERATORS_HPP
#define MORCELL_OPERATORS_HPP

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "morcell/battery_model.hpp"
#include "morcell/vector_array.hpp"

namespace morcell
{

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class MatrixOperator;
class Operator;
class AffineOperator;

/// A restricted operator evaluates the rows `dofs` of its parent from the values
/// at `source_dofs` only (sorted, duplicate-free).
struct Restriction
{
  std::shared_ptr<const Operator> op;
  std::vector<Index> source_dofs;
};

/// Affinely parameter-dependent vector u(mu) = sum_q theta_q(mu) components_q.
class ParametricVector
{
public:
  using Coefficients = std::function<Eigen::VectorXd(const Parameter &)>;

  ParametricVector() = default;
  ParametricVector(VectorArray components, Coefficients coefficients);
  /// The parameter-independent vector v (a single vector).
  static ParametricVector constant(VectorArray v);

  const VectorSpace &space() const { return components_.space(); }
  const VectorArray &components() const { return components_; }
  const Coefficients &coefficients() const { return coefficients_; }

  VectorArray evaluate(const Parameter &mu) const;
  /// Same coefficient functions over new components, e.g. projected ones.
  ParametricVector with_components(VectorArray components) const;

private:
  VectorArray components_;
  Coefficients coefficients_;
};

/// Linear or nonlinear, possibly parametric, map between vector spaces. All
/// algorithms (time stepping, projection, interpolation) are written against this
/// interface only. Implementations are immutable after construction, so every
/// const member function is safe to call concurrently.
class Operator
{
public:
  virtual ~Operator() = default;

  virtual const VectorSpace &source_space() const = 0;
  virtual const VectorSpace &range_space() const = 0;
  Index source_dim() const { return source_space().dim; }
  Index range_dim() const { return range_space().dim; }

  virtual bool linear() const { return false; }

  virtual VectorArray apply(const VectorArray &u, const Parameter &mu) const = 0;

  /// Jacobian at the single vector `u`. For linear operators the operator itself.
  virtual std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u,
                                                         const Parameter &mu) const = 0;

  /// Operator restricted to the output DOFs `dofs`. Throws ConfigError if the
  /// operator is not restrictable.
  virtual Restriction restricted(std::span<const Index> dofs) const;

  /// A(u) = F(u) + N(u) with an affine part F and a remainder N, or null. Reductions
  /// project F exactly and only interpolate N.
  struct AffineSplitting
  {
    std::shared_ptr<const AffineOperator> affine;
    std::shared_ptr<const Operator> remainder;
  };
  virtual std::optional<AffineSplitting> affine_splitting() const { return std::nullopt; }

protected:
  void check_source(const VectorArray &u) const;
};

/// Linear operator given by a sparse (row-major) or dense matrix. Linear solves
/// are exposed through apply_inverse and use a direct factorization of the
/// row-equilibrated matrix.
class MatrixOperator : public Operator, public std::enable_shared_from_this<MatrixOperator>
{
public:
  using Storage = std::variant<SparseMatrix, Eigen::MatrixXd>;

  MatrixOperator(Storage matrix, VectorSpace source, VectorSpace range);
  /// Square matrix acting on `space`.
  MatrixOperator(Storage matrix, VectorSpace space);

  static std::shared_ptr<const MatrixOperator> identity(const VectorSpace &space, bool sparse);
  static std::shared_ptr<const MatrixOperator> diagonal(const Eigen::VectorXd &d,
                                                        const VectorSpace &space);

  /// Sum of coefficient * operator; sparse if every term is sparse.
  static std::shared_ptr<const MatrixOperator>
  lincomb(std::span<const std::shared_ptr<const MatrixOperator>> ops, std::span<const double> coefficients);

  const VectorSpace &source_space() const override { return source_; }
  const VectorSpace &range_space() const override { return range_; }
  bool linear() const override { return true; }

  VectorArray apply(const VectorArray &u, const Parameter &mu = {}) const override;
  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u,
                                                 const Parameter &mu) const override;

  /// Solves A x = v column by column.
  VectorArray apply_inverse(const VectorArray &v, const Parameter &mu = {}) const;

  /// Diagonal map into the Euclidean space of the range scaling row i by the
  /// inverse of the largest absolute entry of row i (1 for empty rows).
  std::shared_ptr<const MatrixOperator> equilibration() const;

  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(matrix_); }
  const SparseMatrix &sparse() const { return std::get<SparseMatrix>(matrix_); }
  const Eigen::MatrixXd &dense() const { return std::get<Eigen::MatrixXd>(matrix_); }
  Eigen::MatrixXd to_dense() const;
  SparseMatrix to_sparse() const;

  /// Matrix product with a dense block, A * X.
  Eigen::MatrixXd times(const Eigen::Ref<const Eigen::MatrixXd> &x) const;

private:
  Storage matrix_;
  VectorSpace source_;
  VectorSpace range_;
};

/// sum_i coefficient_i * op_i(u).
class LincombOperator : public Operator
{
public:
  LincombOperator(std::vector<std::shared_ptr<const Operator>> ops, std::vector<double> coefficients);

  const VectorSpace &source_space() const override { return ops_.front()->source_space(); }
  const VectorSpace &range_space() const override { return ops_.front()->range_space(); }
  bool linear() const override;

  VectorArray apply(const VectorArray &u, const Parameter &mu) const override;
  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u,
                                                 const Parameter &mu) const override;

private:
  std::vector<std::shared_ptr<const Operator>> ops_;
  std::vector<double> coefficients_;
};

/// u -> sum_q theta_q(mu) (L_q u + b_q), affine in u and in the coefficients theta.
class AffineOperator : public Operator
{
public:
  using Coefficients = std::function<Eigen::VectorXd(const Parameter &)>;

  /// One shift vector b_q per matrix L_q.
  AffineOperator(std::vector<std::shared_ptr<const MatrixOperator>> matrices, VectorArray shifts,
                 Coefficients coefficients);

  const VectorSpace &source_space() const override { return matrices_.front()->source_space(); }
  const VectorSpace &range_space() const override { return matrices_.front()->range_space(); }

  VectorArray apply(const VectorArray &u, const Parameter &mu) const override;
  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u,
                                                 const Parameter &mu) const override;

  const std::vector<std::shared_ptr<const MatrixOperator>> &matrices() const { return matrices_; }
  const VectorArray &shifts() const { return shifts_; }
  Eigen::VectorXd coefficients(const Parameter &mu) const;

  /// W^* L_q V and W^* b_q with the same coefficient functions.
  std::shared_ptr<const AffineOperator> projected(const VectorArray &range_basis,
                                                  const VectorArray &source_basis) const;

private:
  std::vector<std::shared_ptr<const MatrixOperator>> matrices_;
  VectorArray shifts_;
  Coefficients coefficients_;
};

/// outer(inner(u)) with a linear outer operator.
class ConcatenationOperator : public Operator
{
public:
  ConcatenationOperator(std::shared_ptr<const MatrixOperator> outer,
                        std::shared_ptr<const Operator> inner);

  const VectorSpace &source_space() const override { return inner_->source_space(); }
  const VectorSpace &range_space() const override { return outer_->range_space(); }
  bool linear() const override { return inner_->linear(); }

  VectorArray apply(const VectorArray &u, const Parameter &mu) const override;
  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u,
                                                 const Parameter &mu) const override;

private:
  std::shared_ptr<const MatrixOperator> outer_;
  std::shared_ptr<const Operator> inner_;
};

/// Galerkin projection a -> W^* A(V a) with W^* the product-adjoint of the range
/// basis. Source and range are Euclidean coefficient spaces.
class ProjectedOperator : public Operator
{
public:
  ProjectedOperator(std::shared_ptr<const Operator> inner, VectorArray range_basis,
                    VectorArray source_basis);

  const VectorSpace &source_space() const override { return source_; }
  const VectorSpace &range_space() const override { return range_; }

  VectorArray apply(const VectorArray &a, const Parameter &mu) const override;
  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &a,
                                                 const Parameter &mu) const override;

  const VectorArray &range_basis() const { return range_basis_; }
  const VectorArray &source_basis() const { return source_basis_; }

private:
  std::shared_ptr<const Operator> inner_;
  VectorArray range_basis_;
  VectorArray source_basis_;
  VectorSpace source_;
  VectorSpace range_;
};

/// Projects `op` onto (range_basis, source_basis). Linear operators are
/// pre-assembled into a dense MatrixOperator.
std::shared_ptr<const Operator> project(std::shared_ptr<const Operator> op,
                                        const VectorArray &range_basis,
                                        const VectorArray &source_basis);

/// Collateral basis and interpolation points of an empirically interpolated operator.
struct EIData
{
  VectorArray collateral_basis;
  std::vector<Index> interpolation_dofs;
  /// (i, j) = collateral_j at interpolation_dofs[i]; unit lower triangular.
  Eigen::MatrixXd interpolation_matrix;
  /// Stencil of the interpolation DOFs; empty until attached to an operator.
  std::vector<Index> source_dofs;
  /// Largest (weighted) interpolation residual over the snapshots before each
  /// basis extension, followed by the final one.
  std::vector<double> max_errors;
  /// Final residual relative to the largest snapshot (weighted max-norm).
  double relative_residual = 0.0;

  Index size() const { return static_cast<Index>(interpolation_dofs.size()); }
  /// Truncates to the first m interpolation points; source DOFs are cleared.
  EIData truncated(Index m) const;
};

/// Interpolant I_M(values) = U * B^{-1} * values for values at the interpolation DOFs.
VectorArray interpolate(const EIData &ei, const Eigen::Ref<const Eigen::MatrixXd> &dof_values);

/// a -> range_map * A~(source_map * a) with the restricted operator A~, the
/// pre-evaluated range_map = W^* U B^{-1} and source_map = R_{M'} V. Evaluation
/// cost does not depend on the dimension of the full space.
class EIOperator : public Operator
{
public:
  EIOperator(Restriction restricted, Eigen::MatrixXd source_map, Eigen::MatrixXd range_map);

  const VectorSpace &source_space() const override { return source_; }
  const VectorSpace &range_space() const override { return range_; }

  VectorArray apply(const VectorArray &a, const Parameter &mu) const override;
  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &a,
                                                 const Parameter &mu) const override;

  const Restriction &restriction() const { return restricted_; }
  const Eigen::MatrixXd &source_map() const { return source_map_; }
  const Eigen::MatrixXd &range_map() const { return range_map_; }

private:
  Restriction restricted_;
  Eigen::MatrixXd source_map_;
  Eigen::MatrixXd range_map_;
  VectorSpace source_;
  VectorSpace range_;
};

/// Builds (P_W o I_M) o A~ o R_{M'} for `op`. Fills in ei.source_dofs if empty,
/// otherwise checks them against the operator's stencil.
std::shared_ptr<const EIOperator> make_ei_operator(const Operator &op, EIData &ei,
                                                   const VectorArray &range_basis,
                                                   const VectorArray &source_basis);

} // namespace morcell

#endif // MORCELL_OPERATORS_HPP
