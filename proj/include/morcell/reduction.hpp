#ifndef MORCELL_REDUCTION_HPP
#define MORCELL_REDUCTION_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include "morcell/discretization.hpp"
#include "morcell/fv_operator.hpp"

namespace morcell
{

struct PodResult
{
  VectorArray modes;
  Eigen::VectorXd singular_values; // descending
  /// True when fewer modes than requested were returned (rank deficiency).
  bool rank_limited = false;
};

/// Relative singular value cut-off of pod(): modes with sigma_i <= pod_rtol * sigma_1
/// are dropped.
inline constexpr double pod_rtol = 1e-7;

/// POD of `snapshots` in their space's product by the method of snapshots
/// (eigendecomposition of the Gramian). Returns at most `modes` orthonormal modes.
PodResult pod(const VectorArray &snapshots, Index modes, std::ostream *notice = nullptr);

/// Modified Gram-Schmidt with one reorthogonalization pass on the vectors from
/// `offset` on; the first `offset` vectors are assumed orthonormal. Vectors whose
/// norm drops below drop_tol times their original norm are removed.
VectorArray gram_schmidt(const VectorArray &vectors, Index offset = 0, double drop_tol = 1e-12);

/// Orthonormal bases of the concentration and potential spaces.
struct ReducedBasis
{
  VectorArray c;
  VectorArray phi;

  Index size() const { return std::max(c.size(), phi.size()); }
  ReducedBasis truncated(Index n) const;
  /// V = V_c (+) V_phi as vectors of the product space.
  VectorArray block(const DofLayout &layout) const;
};

struct GreedyRecord
{
  Index iteration = 0;
  Index selected = 0;       // index into the training set
  Parameter mu;
  double max_error = 0.0;   // over the training set before the extension
  Index size_c = 0;         // basis sizes after the extension
  Index size_phi = 0;
  double seconds = 0.0;
};

struct GreedyLog
{
  std::vector<GreedyRecord> records;
  std::vector<std::vector<double>> errors; // per iteration, per training parameter
};

struct GreedySettings
{
  Index target_size = 8;
  double tolerance = 0.0;
  unsigned workers = 1;
};

struct PodGreedyResult
{
  ReducedBasis basis;
  GreedyLog log;
};

/// POD-Greedy with the true relative L-infinity-L2 reduction error (maximum of the
/// two fields). `trajectories[i]` is the detailed solution for training[i].
/// The first iteration (empty basis) selects the parameter with the largest sum of
/// field norms, each normalized by its maximum over the training set. A reduced
/// solve failure counts as infinite error.
PodGreedyResult pod_greedy(const InstationaryDiscretization &detailed, const DofLayout &layout,
                           const std::vector<Parameter> &training, const std::vector<Trajectory> &trajectories,
                           const GreedySettings &settings, std::ostream *log = nullptr);

/// Empirical interpolation greedy on the columns of `snapshots`. With `scaling`
/// the selection works on diag(scaling) * snapshots, the collateral vectors are
/// still normalized to 1 at their interpolation DOF. Stops at max_size or when the
/// largest (scaled) max-norm residual is <= tol.
EIData ei_greedy(const VectorArray &snapshots, Index max_size, double tol = 0.0,
                 const Eigen::VectorXd *scaling = nullptr, std::ostream *notice = nullptr);

/// Evaluations of `op` at every state of the trajectories (at each trajectory's
/// parameter) and, with `block_basis`, also at the orthogonal projections of those
/// states onto its span. Solved states annihilate the algebraic rows, the
/// projected ones do not.
VectorArray operator_snapshots(const Operator &op, const std::vector<Trajectory> &trajectories,
                               const VectorArray *block_basis = nullptr, unsigned workers = 1);

/// Directional derivatives J(u) V of `op` at every trajectory state along every
/// vector of `block_basis`. Interpolating these as well keeps the reduced
/// Jacobian of the interpolated model close to the projected one.
VectorArray jacobian_snapshots(const Operator &op, const std::vector<Trajectory> &trajectories,
                               const VectorArray &block_basis, unsigned workers = 1);

/// Scales every column to unit max-norm of diag(scaling) * column; zero columns
/// are left alone.
void normalize_columns(VectorArray &snapshots, const Eigen::VectorXd &scaling);

/// The part of `op` an interpolated reduction approximates: the remainder of its
/// affine splitting, or `op` itself.
std::shared_ptr<const Operator> interpolation_target(std::shared_ptr<const Operator> op);

/// Per-DOF weights equal to the inverse of the largest absolute snapshot value in
/// each field block (1 for blocks that vanish).
Eigen::VectorXd block_scaling(const VectorArray &snapshots, const DofLayout &layout);

struct ReducedModel
{
  InstationaryDiscretization discretization;
  ReducedBasis basis;
  VectorArray block_basis;
};

/// Galerkin reduction of `detailed` onto the block basis (projected space
/// operator), or, with `ei`, its empirically interpolated version. With `ei`, an
/// affine splitting of the space operator is used when available: the affine
/// part is projected exactly and `ei` must interpolate interpolation_target().
ReducedModel reduce(const InstationaryDiscretization &detailed, const DofLayout &layout,
                    const ReducedBasis &basis, EIData *ei = nullptr);

/// Reconstructs a reduced trajectory in the detailed space.
Trajectory reconstruct(const Trajectory &reduced, const VectorArray &block_basis);

/// Projection coefficients <V_i, u> of the trajectory states (orthonormal V).
Trajectory project_trajectory(const Trajectory &detailed, const VectorArray &block_basis);

} // namespace morcell

#endif // MORCELL_REDUCTION_HPP
