#ifndef MORCELL_FV_OPERATOR_HPP
#define MORCELL_FV_OPERATOR_HPP

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "morcell/battery_model.hpp"
#include "morcell/discretization.hpp"
#include "morcell/geometry.hpp"
#include "morcell/operators.hpp"

namespace morcell
{

enum class Field : std::uint8_t
{
  Concentration,
  Potential
};

/// DOF numbering of V_h (+) V_h: DOF K is the concentration of cell K, DOF n + K
/// its potential. Both the product space and the single-field space carry the
/// volume-weighted L2 product.
class DofLayout
{
public:
  DofLayout() = default;
  DofLayout(Index cells, double cell_volume);

  Index cells() const { return cells_; }
  Index size() const { return 2 * cells_; }
  double cell_volume() const { return cell_volume_; }

  Index dof(Field f, Index cell) const { return f == Field::Concentration ? cell : cells_ + cell; }
  Index cell_of(Index dof) const { return dof < cells_ ? dof : dof - cells_; }
  Field field_of(Index dof) const { return dof < cells_ ? Field::Concentration : Field::Potential; }

  const VectorSpace &product_space() const { return product_; }
  const VectorSpace &field_space() const { return field_; }

  /// The block of `states` belonging to one field, as vectors of field_space().
  VectorArray field(const VectorArray &states, Field f) const;
  /// Stacks a concentration and a potential array of equal length.
  VectorArray join(const VectorArray &c, const VectorArray &phi) const;
  /// Embeds field vectors into the product space, zero in the other block.
  VectorArray embed(const VectorArray &v, Field f) const;

private:
  Index cells_ = 0;
  double cell_volume_ = 1.0;
  VectorSpace product_;
  VectorSpace field_;
};

/// Total outward current through the two kinds of driven boundary faces.
struct BoundaryCurrents
{
  double charge = 0.0;
  double ground = 0.0;
};

/// Cell-centered finite volume operator A_mu of the microscale cell model.
///
/// Row K of the concentration block is (1/|K|) sum_faces N.n |face| and row K of
/// the potential block (1/|K|) sum_faces j.n |face|, with
///  - two-point fluxes with harmonic-mean coefficients on same-label faces and on
///    collector/electrode contacts,
///  - Butler-Volmer fluxes on electrolyte/particle faces (mass flux j/F),
///  - j.n = -I on the x-max faces of the positive collector,
///  - phi = 0 on the x-min faces of the negative collector, imposed through a
///    mirrored ghost value,
///  - zero flux elsewhere, in particular between collectors and electrolyte.
///
/// Each output DOF depends on both fields of its cell and of its <= 6 face
/// neighbours only (at most 14 source DOFs).
class BatterySpaceOperator : public Operator
{
public:
  explicit BatterySpaceOperator(VoxelGeometry geometry,
                                MaterialTable materials = MaterialTable::reference(),
                                PhysicalConstants constants = {});

  const VoxelGeometry &geometry() const { return geometry_; }
  const DofLayout &layout() const { return layout_; }
  const MaterialTable &materials() const { return materials_; }
  const PhysicalConstants &constants() const { return constants_; }

  const VectorSpace &source_space() const override { return layout_.product_space(); }
  const VectorSpace &range_space() const override { return layout_.product_space(); }

  VectorArray apply(const VectorArray &u, const Parameter &mu) const override;
  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u,
                                                 const Parameter &mu) const override;
  Restriction restricted(std::span<const Index> dofs) const override;

  /// Which face couplings contribute to the rows.
  enum class Terms : std::uint8_t
  {
    All,
    /// Two-point, charge and ground couplings: affine in u and in (1, T, I).
    Affine,
    /// Butler-Volmer couplings only.
    Interface
  };
  Terms terms() const { return terms_; }
  /// Copy of this operator evaluating only `terms`.
  std::shared_ptr<const BatterySpaceOperator> part(Terms terms) const;

  /// Affine part with theta(mu) = (1, T, I), remainder part(Terms::Interface).
  std::optional<AffineSplitting> affine_splitting() const override;

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd> &u, const Parameter &mu) const;
  SparseMatrix assemble_jacobian(const Eigen::Ref<const Eigen::VectorXd> &u, const Parameter &mu) const;

  /// Sorted source DOFs the row `dof` depends on.
  std::vector<Index> stencil(Index dof) const;

  BoundaryCurrents boundary_currents(const Eigen::Ref<const Eigen::VectorXd> &u,
                                     const Parameter &mu) const;

  /// Initial concentrations c0 per subdomain and an estimate of the potentials:
  /// open-circuit offsets relative to the grounded negative side plus the
  /// overpotentials that carry the applied current through each electrode's
  /// interface. Affine in two mu-dependent overpotentials.
  ParametricVector initial_data() const;
  Eigen::VectorXd initial_guess(const Parameter &mu = {}) const;

  /// Coupling of a cell to one of its 6 face neighbours (-x, +x, -y, +y, -z, +z).
  enum class Coupling : std::uint8_t
  {
    None,
    TwoPoint,
    ParticleSide,
    ElectrolyteSide,
    Charge,
    Ground
  };

  struct CellStencil
  {
    std::array<Index, 6> neighbor{};
    std::array<Coupling, 6> coupling{};
  };

  const CellStencil &cell_stencil(Index cell) const { return stencils_[static_cast<std::size_t>(cell)]; }

  /// Values of both fields on a cell (slot 0) and its neighbours (slot 1 + direction).
  struct LocalValues
  {
    std::array<double, 7> c{};
    std::array<double, 7> phi{};
  };

  /// Row derivatives w.r.t. the slots of LocalValues.
  struct LocalJacobian
  {
    std::array<double, 7> c_by_c{};
    std::array<double, 7> c_by_phi{};
    std::array<double, 7> phi_by_c{};
    std::array<double, 7> phi_by_phi{};
  };

  struct Context;

  /// The single per-cell kernel behind evaluate, assemble_jacobian and the
  /// restricted operator.
  void cell_rows(Index cell, const LocalValues &v, const Context &ctx, double &c_row,
                 double &phi_row, LocalJacobian *jac) const;

  Context context(const Parameter &mu) const;

  /// Slot order matching ascending DOF numbering of the stencil.
  static constexpr std::array<int, 7> sorted_slots = {1, 3, 5, 0, 6, 4, 2};

private:
  void gather(Index cell, const double *u, LocalValues &v) const;
  void build_jacobian_pattern();

  VoxelGeometry geometry_;
  MaterialTable materials_;
  PhysicalConstants constants_;
  DofLayout layout_;
  Terms terms_ = Terms::All;
  std::vector<CellStencil> stencils_;
  // CSR pattern of the Jacobian; both rows of a cell share their columns
  SparseMatrix pattern_;
};

struct BatterySpaceOperator::Context
{
  std::array<FluxCoefficients, 5> coefficients{};
  std::array<Kinetics, 5> kinetics{};
  double charge_rate = 0.0;
  double inv_h = 1.0;
};

/// Mass selector E: identity on the concentration block, zero on the potential block.
std::shared_ptr<const MatrixOperator> concentration_selector(const DofLayout &layout);

/// The detailed model E du/dt + A_mu(u) = 0 with initial data initial_data().
InstationaryDiscretization discretize(std::shared_ptr<const BatterySpaceOperator> op, Index steps, double dt,
                                      NewtonSettings newton = {});

} // namespace morcell

#endif // MORCELL_FV_OPERATOR_HPP
