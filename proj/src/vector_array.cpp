#include "morcell/vector_array.hpp"

#include "morcell/errors.hpp"

namespace morcell
{

VectorArray::VectorArray(VectorSpace space, Index count)
  : space_(std::move(space)), data_(Eigen::MatrixXd::Zero(space_.dim, count))
{
}

VectorArray::VectorArray(VectorSpace space, Eigen::MatrixXd columns)
  : space_(std::move(space)), data_(std::move(columns))
{
  if (data_.rows() != space_.dim)
    throw ConfigError("vector array: " + std::to_string(data_.rows()) +
                      " rows do not match space dimension " + std::to_string(space_.dim));
}

void VectorArray::check_space(const VectorArray &other, const char *op) const
{
  if (other.dim() != dim())
    throw ConfigError(std::string("vector array ") + op + ": dimension " +
                      std::to_string(other.dim()) + " != " + std::to_string(dim()));
}

void VectorArray::append(const VectorArray &other)
{
  check_space(other, "append");
  if (other.empty())
    return;
  if (&other == this)
  {
    const Eigen::MatrixXd copy = data_;
    data_.conservativeResize(Eigen::NoChange, 2 * copy.cols());
    data_.rightCols(copy.cols()) = copy;
    return;
  }
  const Index old = size();
  data_.conservativeResize(Eigen::NoChange, old + other.size());
  data_.rightCols(other.size()) = other.data_;
}

VectorArray VectorArray::slice(Index begin, Index end) const
{
  if (begin < 0 || end < begin || end > size())
    throw ConfigError("vector array slice out of range");
  return VectorArray(space_, Eigen::MatrixXd(data_.middleCols(begin, end - begin)));
}

VectorArray VectorArray::lincomb(const Eigen::Ref<const Eigen::MatrixXd> &coefficients) const
{
  if (coefficients.rows() != size())
    throw ConfigError("lincomb: " + std::to_string(coefficients.rows()) +
                      " coefficient rows for " + std::to_string(size()) + " vectors");
  if (size() == 0)
    return VectorArray(space_, coefficients.cols());
  return VectorArray(space_, Eigen::MatrixXd(data_ * coefficients));
}

void VectorArray::axpy(double alpha, const VectorArray &x)
{
  check_space(x, "axpy");
  if (x.size() == 1)
    data_.colwise() += alpha * x.data_.col(0);
  else if (x.size() == size())
    data_ += alpha * x.data_;
  else
    throw ConfigError("axpy: incompatible array lengths");
}

Eigen::MatrixXd VectorArray::inner(const VectorArray &other) const
{
  check_space(other, "inner");
  if (space_.weights)
    return data_.transpose() * space_.weights->asDiagonal() * other.data_;
  return data_.transpose() * other.data_;
}

Eigen::VectorXd VectorArray::norms() const
{
  if (space_.weights)
    return (data_.array().square().colwise() * space_.weights->array()).colwise().sum().sqrt().transpose();
  return data_.colwise().norm().transpose();
}

Eigen::VectorXd VectorArray::sup_norms() const
{
  if (empty())
    return {};
  return data_.cwiseAbs().colwise().maxCoeff().transpose();
}

Eigen::MatrixXd VectorArray::dofs(std::span<const Index> indices) const
{
  Eigen::MatrixXd out(static_cast<Index>(indices.size()), size());
  for (std::size_t r = 0; r < indices.size(); ++r)
  {
    const Index d = indices[r];
    if (d < 0 || d >= dim())
      throw ConfigError("DOF index " + std::to_string(d) + " out of range");
    out.row(static_cast<Index>(r)) = data_.row(d);
  }
  return out;
}

} // namespace morcell
