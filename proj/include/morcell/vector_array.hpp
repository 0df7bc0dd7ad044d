#ifndef MORCELL_VECTOR_ARRAY_HPP
#define MORCELL_VECTOR_ARRAY_HPP

#include <concepts>
#include <memory>
#include <span>

#include <Eigen/Dense>

#include "morcell/geometry.hpp"

namespace morcell
{

/// A vector space R^dim with a diagonal inner product. Null weights mean the
/// Euclidean product; spaces compare equal when dims match and the weights are
/// the same object (or both Euclidean).
struct VectorSpace
{
  Index dim = 0;
  std::shared_ptr<const Eigen::VectorXd> weights;

  static VectorSpace euclidean(Index dim) { return {dim, nullptr}; }
  static VectorSpace weighted(Eigen::VectorXd w)
  {
    const Index n = w.size();
    return {n, std::make_shared<const Eigen::VectorXd>(std::move(w))};
  }

  bool operator==(const VectorSpace &o) const { return dim == o.dim && weights == o.weights; }
};

/// Ordered collection of vectors of one space, stored as the columns of a dense
/// matrix. Value semantics: copies are deep and independent.
///
/// Read-only member functions may be called concurrently; append and the
/// in-place updates need exclusive access.
class VectorArray
{
public:
  VectorArray() = default;
  explicit VectorArray(VectorSpace space, Index count = 0);
  VectorArray(VectorSpace space, Eigen::MatrixXd columns);

  const VectorSpace &space() const { return space_; }
  Index dim() const { return space_.dim; }
  Index size() const { return data_.cols(); }
  bool empty() const { return data_.cols() == 0; }

  /// Column-wise storage. Intended for operator implementations.
  const Eigen::MatrixXd &data() const { return data_; }
  Eigen::MatrixXd &data() { return data_; }

  VectorArray zeros(Index count) const { return VectorArray(space_, count); }

  void append(const VectorArray &other);
  VectorArray slice(Index begin, Index end) const;
  VectorArray at(Index i) const { return slice(i, i + 1); }

  /// Result column j = sum_i coefficients(i, j) * vector_i.
  VectorArray lincomb(const Eigen::Ref<const Eigen::MatrixXd> &coefficients) const;

  /// this += alpha * x; x must hold one vector (broadcast) or size() vectors.
  void axpy(double alpha, const VectorArray &x);
  void scal(double alpha) { data_ *= alpha; }

  /// G(i, j) = <this_i, other_j> in the space's product.
  Eigen::MatrixXd inner(const VectorArray &other) const;
  Eigen::MatrixXd gramian() const { return inner(*this); }
  Eigen::VectorXd norms() const;
  Eigen::VectorXd sup_norms() const;

  /// Values at the given DOFs, one row per requested DOF in request order.
  Eigen::MatrixXd dofs(std::span<const Index> indices) const;

private:
  void check_space(const VectorArray &other, const char *op) const;

  VectorSpace space_;
  Eigen::MatrixXd data_;
};

/// The operations the reduction algorithms rely on.
template <typename A>
concept VectorArrayLike = requires(A a, const A ca, double s, Index i, const Eigen::MatrixXd &m,
                                   std::span<const Index> idx) {
  { ca.dim() } -> std::convertible_to<Index>;
  { ca.size() } -> std::convertible_to<Index>;
  { ca.zeros(i) } -> std::same_as<A>;
  { ca.lincomb(m) } -> std::same_as<A>;
  { ca.inner(ca) } -> std::convertible_to<Eigen::MatrixXd>;
  { ca.norms() } -> std::convertible_to<Eigen::VectorXd>;
  { ca.dofs(idx) } -> std::convertible_to<Eigen::MatrixXd>;
  { ca.slice(i, i) } -> std::same_as<A>;
  a.append(ca);
  a.axpy(s, ca);
  a.scal(s);
};

static_assert(VectorArrayLike<VectorArray>);

} // namespace morcell

#endif // MORCELL_VECTOR_ARRAY_HPP
