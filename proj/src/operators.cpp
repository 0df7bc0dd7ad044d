#include "morcell/operators.hpp"

#include <algorithm>

#include "morcell/errors.hpp"
#include "morcell/linear_solver.hpp"

namespace morcell
{

ParametricVector::ParametricVector(VectorArray components, Coefficients coefficients)
  : components_(std::move(components)), coefficients_(std::move(coefficients))
{
  if (!coefficients_)
    throw ConfigError("parametric vector: missing coefficient function");
}

ParametricVector ParametricVector::constant(VectorArray v)
{
  if (v.size() != 1)
    throw ConfigError("parametric vector: expected a single vector");
  return {std::move(v), [](const Parameter &) { return Eigen::VectorXd::Ones(1).eval(); }};
}

VectorArray ParametricVector::evaluate(const Parameter &mu) const
{
  const Eigen::VectorXd theta = coefficients_(mu);
  if (theta.size() != components_.size())
    throw ConfigError("parametric vector: coefficient count does not match the components");
  return components_.lincomb(theta);
}

ParametricVector ParametricVector::with_components(VectorArray components) const
{
  if (components.size() != components_.size())
    throw ConfigError("parametric vector: component count changed");
  return {std::move(components), coefficients_};
}

Restriction Operator::restricted(std::span<const Index>) const
{
  throw ConfigError("operator is not restrictable");
}

void Operator::check_source(const VectorArray &u) const
{
  if (u.dim() != source_dim())
    throw ConfigError("operator source dimension " + std::to_string(source_dim()) +
                      " does not match vector dimension " + std::to_string(u.dim()));
}

// ---------------------------------------------------------------------------
// MatrixOperator

MatrixOperator::MatrixOperator(Storage matrix, VectorSpace source, VectorSpace range)
  : matrix_(std::move(matrix)), source_(std::move(source)), range_(std::move(range))
{
  const auto [rows, cols] = std::visit([](const auto &m) { return std::pair{m.rows(), m.cols()}; }, matrix_);
  if (rows != range_.dim || cols != source_.dim)
    throw ConfigError("matrix operator: " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " matrix does not match spaces");
}

MatrixOperator::MatrixOperator(Storage matrix, VectorSpace space)
  : MatrixOperator(std::move(matrix), space, space)
{
}

std::shared_ptr<const MatrixOperator> MatrixOperator::identity(const VectorSpace &space, bool sparse)
{
  if (sparse)
  {
    SparseMatrix id(space.dim, space.dim);
    id.setIdentity();
    return std::make_shared<const MatrixOperator>(std::move(id), space);
  }
  return std::make_shared<const MatrixOperator>(Eigen::MatrixXd::Identity(space.dim, space.dim), space);
}

std::shared_ptr<const MatrixOperator> MatrixOperator::diagonal(const Eigen::VectorXd &d,
                                                               const VectorSpace &space)
{
  SparseMatrix m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Ones(d.size()));
  for (Index i = 0; i < d.size(); ++i)
    m.insert(i, i) = d[i];
  m.makeCompressed();
  return std::make_shared<const MatrixOperator>(std::move(m), space);
}

std::shared_ptr<const MatrixOperator>
MatrixOperator::lincomb(std::span<const std::shared_ptr<const MatrixOperator>> ops,
                        std::span<const double> coefficients)
{
  if (ops.empty() || ops.size() != coefficients.size())
    throw ConfigError("matrix lincomb: need one coefficient per operator");
  const bool sparse = std::all_of(ops.begin(), ops.end(), [](const auto &op) { return op->is_sparse(); });
  const VectorSpace &src = ops.front()->source_space();
  const VectorSpace &rng = ops.front()->range_space();
  if (sparse)
  {
    SparseMatrix sum = coefficients[0] * ops[0]->sparse();
    for (std::size_t i = 1; i < ops.size(); ++i)
      sum += coefficients[i] * ops[i]->sparse();
    return std::make_shared<const MatrixOperator>(std::move(sum), src, rng);
  }
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rng.dim, src.dim);
  for (std::size_t i = 0; i < ops.size(); ++i)
  {
    if (ops[i]->is_sparse())
      sum += coefficients[i] * Eigen::MatrixXd(ops[i]->sparse());
    else
      sum += coefficients[i] * ops[i]->dense();
  }
  return std::make_shared<const MatrixOperator>(std::move(sum), src, rng);
}

Eigen::MatrixXd MatrixOperator::times(const Eigen::Ref<const Eigen::MatrixXd> &x) const
{
  if (is_sparse())
    return sparse() * x;
  return dense() * x;
}

VectorArray MatrixOperator::apply(const VectorArray &u, const Parameter &) const
{
  check_source(u);
  return VectorArray(range_, times(u.data()));
}

std::shared_ptr<const MatrixOperator> MatrixOperator::jacobian(const VectorArray &,
                                                               const Parameter &) const
{
  if (auto self = weak_from_this().lock())
    return self;
  return std::make_shared<const MatrixOperator>(*this);
}

VectorArray MatrixOperator::apply_inverse(const VectorArray &v, const Parameter &) const
{
  if (v.dim() != range_dim())
    throw ConfigError("apply_inverse: dimension mismatch");
  if (is_sparse())
    return VectorArray(source_, solve_linear(sparse(), v.data()));
  return VectorArray(source_, solve_linear(dense(), v.data()));
}

std::shared_ptr<const MatrixOperator> MatrixOperator::equilibration() const
{
  Eigen::VectorXd s = Eigen::VectorXd::Ones(range_dim());
  if (is_sparse())
  {
    const SparseMatrix &a = sparse();
    for (Index r = 0; r < a.outerSize(); ++r)
    {
      double m = 0.0;
      for (SparseMatrix::InnerIterator it(a, r); it; ++it)
        m = std::max(m, std::abs(it.value()));
      if (m > 0.0)
        s[r] = 1.0 / m;
    }
  }
  else
  {
    for (Index r = 0; r < dense().rows(); ++r)
    {
      const double m = dense().cols() > 0 ? dense().row(r).cwiseAbs().maxCoeff() : 0.0;
      if (m > 0.0)
        s[r] = 1.0 / m;
    }
  }
  SparseMatrix d(s.size(), s.size());
  d.reserve(Eigen::VectorXi::Ones(s.size()));
  for (Index i = 0; i < s.size(); ++i)
    d.insert(i, i) = s[i];
  d.makeCompressed();
  return std::make_shared<const MatrixOperator>(std::move(d), range_, VectorSpace::euclidean(range_dim()));
}

Eigen::MatrixXd MatrixOperator::to_dense() const
{
  if (is_sparse())
    return Eigen::MatrixXd(sparse());
  return dense();
}

SparseMatrix MatrixOperator::to_sparse() const
{
  if (is_sparse())
    return sparse();
  return dense().sparseView();
}

// ---------------------------------------------------------------------------
// LincombOperator / ConcatenationOperator

LincombOperator::LincombOperator(std::vector<std::shared_ptr<const Operator>> ops,
                                 std::vector<double> coefficients)
  : ops_(std::move(ops)), coefficients_(std::move(coefficients))
{
  if (ops_.empty() || ops_.size() != coefficients_.size())
    throw ConfigError("lincomb operator: need one coefficient per operator");
  for (const auto &op : ops_)
    if (op->source_dim() != ops_.front()->source_dim() || op->range_dim() != ops_.front()->range_dim())
      throw ConfigError("lincomb operator: incompatible operator dimensions");
}

bool LincombOperator::linear() const
{
  return std::all_of(ops_.begin(), ops_.end(), [](const auto &op) { return op->linear(); });
}

VectorArray LincombOperator::apply(const VectorArray &u, const Parameter &mu) const
{
  check_source(u);
  VectorArray result = ops_.front()->apply(u, mu);
  result.scal(coefficients_.front());
  for (std::size_t i = 1; i < ops_.size(); ++i)
    result.axpy(coefficients_[i], ops_[i]->apply(u, mu));
  return result;
}

std::shared_ptr<const MatrixOperator> LincombOperator::jacobian(const VectorArray &u,
                                                                const Parameter &mu) const
{
  std::vector<std::shared_ptr<const MatrixOperator>> jacs;
  jacs.reserve(ops_.size());
  for (const auto &op : ops_)
    jacs.push_back(op->jacobian(u, mu));
  return MatrixOperator::lincomb(jacs, coefficients_);
}

// ---------------------------------------------------------------------------
// AffineOperator

AffineOperator::AffineOperator(std::vector<std::shared_ptr<const MatrixOperator>> matrices, VectorArray shifts,
                               Coefficients coefficients)
  : matrices_(std::move(matrices)), shifts_(std::move(shifts)), coefficients_(std::move(coefficients))
{
  if (matrices_.empty() || !coefficients_)
    throw ConfigError("affine operator: need at least one term and a coefficient function");
  if (shifts_.size() != static_cast<Index>(matrices_.size()) || shifts_.dim() != matrices_.front()->range_dim())
    throw ConfigError("affine operator: need one shift in the range per matrix");
  for (const auto &m : matrices_)
    if (m->source_dim() != matrices_.front()->source_dim() || m->range_dim() != matrices_.front()->range_dim())
      throw ConfigError("affine operator: incompatible matrix dimensions");
}

Eigen::VectorXd AffineOperator::coefficients(const Parameter &mu) const
{
  Eigen::VectorXd theta = coefficients_(mu);
  if (theta.size() != static_cast<Index>(matrices_.size()))
    throw ConfigError("affine operator: coefficient count does not match the terms");
  return theta;
}

VectorArray AffineOperator::apply(const VectorArray &u, const Parameter &mu) const
{
  check_source(u);
  const Eigen::VectorXd theta = coefficients(mu);
  Eigen::MatrixXd out = (shifts_.data() * theta).replicate(1, u.size());
  for (std::size_t q = 0; q < matrices_.size(); ++q)
    if (theta[static_cast<Index>(q)] != 0.0)
      out += theta[static_cast<Index>(q)] * matrices_[q]->times(u.data());
  return VectorArray(range_space(), std::move(out));
}

std::shared_ptr<const MatrixOperator> AffineOperator::jacobian(const VectorArray &, const Parameter &mu) const
{
  const Eigen::VectorXd theta = coefficients(mu);
  return MatrixOperator::lincomb(matrices_, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
}

std::shared_ptr<const AffineOperator> AffineOperator::projected(const VectorArray &range_basis,
                                                                const VectorArray &source_basis) const
{
  if (range_basis.dim() != range_dim() || source_basis.dim() != source_dim())
    throw ConfigError("projection: basis dimension does not match operator");
  const VectorSpace src = VectorSpace::euclidean(source_basis.size());
  const VectorSpace rng = VectorSpace::euclidean(range_basis.size());
  std::vector<std::shared_ptr<const MatrixOperator>> matrices;
  for (const auto &m : matrices_)
  {
    Eigen::MatrixXd p = range_basis.size() && source_basis.size() ? range_basis.inner(m->apply(source_basis))
                                                                  : Eigen::MatrixXd(range_basis.size(), source_basis.size());
    matrices.push_back(std::make_shared<const MatrixOperator>(std::move(p), src, rng));
  }
  Eigen::MatrixXd b = range_basis.size() ? range_basis.inner(shifts_) : Eigen::MatrixXd(0, shifts_.size());
  return std::make_shared<const AffineOperator>(std::move(matrices), VectorArray(rng, std::move(b)), coefficients_);
}

ConcatenationOperator::ConcatenationOperator(std::shared_ptr<const MatrixOperator> outer,
                                             std::shared_ptr<const Operator> inner)
  : outer_(std::move(outer)), inner_(std::move(inner))
{
  if (outer_->source_dim() != inner_->range_dim())
    throw ConfigError("concatenation: incompatible operator dimensions");
}

VectorArray ConcatenationOperator::apply(const VectorArray &u, const Parameter &mu) const
{
  return outer_->apply(inner_->apply(u, mu), mu);
}

std::shared_ptr<const MatrixOperator> ConcatenationOperator::jacobian(const VectorArray &u,
                                                                      const Parameter &mu) const
{
  const auto inner = inner_->jacobian(u, mu);
  if (outer_->is_sparse() && inner->is_sparse())
    return std::make_shared<const MatrixOperator>(SparseMatrix(outer_->sparse() * inner->sparse()),
                                                  source_space(), range_space());
  return std::make_shared<const MatrixOperator>(Eigen::MatrixXd(outer_->times(inner->to_dense())),
                                                source_space(), range_space());
}

// ---------------------------------------------------------------------------
// ProjectedOperator

ProjectedOperator::ProjectedOperator(std::shared_ptr<const Operator> inner, VectorArray range_basis,
                                     VectorArray source_basis)
  : inner_(std::move(inner)), range_basis_(std::move(range_basis)),
    source_basis_(std::move(source_basis)), source_(VectorSpace::euclidean(source_basis_.size())),
    range_(VectorSpace::euclidean(range_basis_.size()))
{
  if (range_basis_.dim() != inner_->range_dim() || source_basis_.dim() != inner_->source_dim())
    throw ConfigError("projection: basis dimension does not match operator");
}

VectorArray ProjectedOperator::apply(const VectorArray &a, const Parameter &mu) const
{
  check_source(a);
  if (range_.dim == 0)
    return VectorArray(range_, a.size());
  const VectorArray u = source_basis_.lincomb(a.data());
  return VectorArray(range_, range_basis_.inner(inner_->apply(u, mu)));
}

std::shared_ptr<const MatrixOperator> ProjectedOperator::jacobian(const VectorArray &a,
                                                                  const Parameter &mu) const
{
  check_source(a);
  if (range_.dim == 0 || source_.dim == 0)
    return std::make_shared<const MatrixOperator>(Eigen::MatrixXd(range_.dim, source_.dim), source_, range_);
  const VectorArray u = source_basis_.lincomb(a.data());
  const auto jac = inner_->jacobian(u, mu);
  const VectorArray jv = jac->apply(source_basis_);
  return std::make_shared<const MatrixOperator>(range_basis_.inner(jv), source_, range_);
}

std::shared_ptr<const Operator> project(std::shared_ptr<const Operator> op,
                                        const VectorArray &range_basis,
                                        const VectorArray &source_basis)
{
  if (op->linear())
  {
    const auto mat = op->jacobian(VectorArray(op->source_space(), 1), Parameter{});
    if (range_basis.dim() != op->range_dim() || source_basis.dim() != op->source_dim())
      throw ConfigError("projection: basis dimension does not match operator");
    Eigen::MatrixXd projected = range_basis.size() && source_basis.size()
                                  ? range_basis.inner(mat->apply(source_basis))
                                  : Eigen::MatrixXd(range_basis.size(), source_basis.size());
    return std::make_shared<const MatrixOperator>(std::move(projected),
                                                  VectorSpace::euclidean(source_basis.size()),
                                                  VectorSpace::euclidean(range_basis.size()));
  }
  return std::make_shared<const ProjectedOperator>(std::move(op), range_basis, source_basis);
}

// ---------------------------------------------------------------------------
// Empirical interpolation

EIData EIData::truncated(Index m) const
{
  if (m < 0 || m > size())
    throw ConfigError("EI truncation beyond collateral basis size");
  EIData t;
  t.collateral_basis = collateral_basis.slice(0, m);
  t.interpolation_dofs.assign(interpolation_dofs.begin(), interpolation_dofs.begin() + m);
  t.interpolation_matrix = interpolation_matrix.topLeftCorner(m, m);
  t.max_errors.assign(max_errors.begin(), max_errors.begin() + std::min<std::size_t>(max_errors.size(), m + 1));
  // max_errors[0] is the largest snapshot entry
  t.relative_residual = relative_residual;
  if (static_cast<std::size_t>(m) < max_errors.size() && max_errors.front() > 0.0)
    t.relative_residual = max_errors[static_cast<std::size_t>(m)] / max_errors.front();
  return t;
}

VectorArray interpolate(const EIData &ei, const Eigen::Ref<const Eigen::MatrixXd> &dof_values)
{
  if (dof_values.rows() != ei.size())
    throw ConfigError("interpolate: expected values at " + std::to_string(ei.size()) + " DOFs");
  const Eigen::MatrixXd coeffs =
    ei.interpolation_matrix.triangularView<Eigen::Lower>().solve(dof_values);
  return ei.collateral_basis.lincomb(coeffs);
}

EIOperator::EIOperator(Restriction restricted, Eigen::MatrixXd source_map, Eigen::MatrixXd range_map)
  : restricted_(std::move(restricted)), source_map_(std::move(source_map)),
    range_map_(std::move(range_map)), source_(VectorSpace::euclidean(source_map_.cols())),
    range_(VectorSpace::euclidean(range_map_.rows()))
{
  if (restricted_.op->source_dim() != source_map_.rows() ||
      restricted_.op->range_dim() != range_map_.cols())
    throw ConfigError("EI operator: restricted operator does not match maps");
}

VectorArray EIOperator::apply(const VectorArray &a, const Parameter &mu) const
{
  check_source(a);
  if (range_.dim == 0)
    return VectorArray(range_, a.size());
  const VectorArray src(restricted_.op->source_space(), source_map_ * a.data());
  const VectorArray values = restricted_.op->apply(src, mu);
  return VectorArray(range_, range_map_ * values.data());
}

std::shared_ptr<const MatrixOperator> EIOperator::jacobian(const VectorArray &a,
                                                           const Parameter &mu) const
{
  check_source(a);
  if (range_.dim == 0 || source_.dim == 0)
    return std::make_shared<const MatrixOperator>(Eigen::MatrixXd(range_.dim, source_.dim), source_, range_);
  const VectorArray src(restricted_.op->source_space(), source_map_ * a.data());
  const auto jac = restricted_.op->jacobian(src, mu);
  // range_map * (J~ * source_map): J~ has at most one stencil of entries per row
  const Eigen::MatrixXd js = jac->times(source_map_);
  return std::make_shared<const MatrixOperator>(Eigen::MatrixXd(range_map_ * js), source_, range_);
}

std::shared_ptr<const EIOperator> make_ei_operator(const Operator &op, EIData &ei,
                                                   const VectorArray &range_basis,
                                                   const VectorArray &source_basis)
{
  if (ei.collateral_basis.dim() != op.range_dim())
    throw ConfigError("EI data: collateral basis does not live in the operator range");
  if (range_basis.dim() != op.range_dim() || source_basis.dim() != op.source_dim())
    throw ConfigError("EI operator: basis dimension does not match operator");
  if (ei.interpolation_matrix.rows() != ei.size() || ei.collateral_basis.size() != ei.size())
    throw ConfigError("EI data: inconsistent sizes");

  Restriction restriction = op.restricted(ei.interpolation_dofs);
  if (ei.source_dofs.empty())
    ei.source_dofs = restriction.source_dofs;
  else if (ei.source_dofs != restriction.source_dofs)
    throw ConfigError("EI data: source DOFs do not match the operator stencil");

  Eigen::MatrixXd range_map(range_basis.size(), ei.size());
  if (range_basis.size() > 0 && ei.size() > 0)
  {
    const Eigen::MatrixXd wu = range_basis.inner(ei.collateral_basis);
    // W^* U B^{-1} = (B^{-T} (W^* U)^T)^T
    range_map = ei.interpolation_matrix.transpose()
                  .triangularView<Eigen::Upper>()
                  .solve(wu.transpose())
                  .transpose();
  }
  Eigen::MatrixXd source_map = source_basis.dofs(restriction.source_dofs);
  return std::make_shared<const EIOperator>(std::move(restriction), std::move(source_map),
                                            std::move(range_map));
}

} // namespace morcell
