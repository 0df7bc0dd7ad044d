#include "morcell/fv_operator.hpp"

#include <algorithm>

#include "morcell/errors.hpp"

namespace morcell
{

// ---------------------------------------------------------------------------
// DofLayout

DofLayout::DofLayout(Index cells, double cell_volume)
  : cells_(cells), cell_volume_(cell_volume),
    product_(VectorSpace::weighted(Eigen::VectorXd::Constant(2 * cells, cell_volume))),
    field_(VectorSpace::weighted(Eigen::VectorXd::Constant(cells, cell_volume)))
{
}

VectorArray DofLayout::field(const VectorArray &states, Field f) const
{
  if (states.dim() != size())
    throw ConfigError("field extraction: state dimension does not match layout");
  const Index offset = f == Field::Concentration ? 0 : cells_;
  return VectorArray(field_, Eigen::MatrixXd(states.data().middleRows(offset, cells_)));
}

VectorArray DofLayout::join(const VectorArray &c, const VectorArray &phi) const
{
  if (c.dim() != cells_ || phi.dim() != cells_ || c.size() != phi.size())
    throw ConfigError("field join: incompatible arrays");
  Eigen::MatrixXd data(size(), c.size());
  data.topRows(cells_) = c.data();
  data.bottomRows(cells_) = phi.data();
  return VectorArray(product_, std::move(data));
}

VectorArray DofLayout::embed(const VectorArray &v, Field f) const
{
  if (v.dim() != cells_)
    throw ConfigError("field embedding: dimension does not match layout");
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(size(), v.size());
  data.middleRows(f == Field::Concentration ? 0 : cells_, cells_) = v.data();
  return VectorArray(product_, std::move(data));
}

// ---------------------------------------------------------------------------
// BatterySpaceOperator

namespace
{

using Coupling = BatterySpaceOperator::Coupling;

// Symmetric in its arguments bit for bit, so both sides of a face see the same
// coefficient.
double harmonic_mean(double x, double y)
{
  if (x == y)
    return x;
  const double p = x * y;
  if (!(p > 0.0))
    return 0.0;
  return 2.0 * p / (x + y);
}

std::size_t idx(Label l) { return static_cast<std::size_t>(l); }

} // namespace

BatterySpaceOperator::BatterySpaceOperator(VoxelGeometry geometry, MaterialTable materials,
                                           PhysicalConstants constants)
  : geometry_(std::move(geometry)), materials_(materials), constants_(constants),
    layout_(geometry_.cells(), geometry_.cell_volume())
{
  materials_.validate();
  const GridDims &d = geometry_.dims();
  stencils_.resize(static_cast<std::size_t>(d.cells()));
  for (Index cell = 0; cell < d.cells(); ++cell)
  {
    const CellIndex ci = geometry_.cell_index(cell);
    const Label a = geometry_.label(cell);
    CellStencil &s = stencils_[static_cast<std::size_t>(cell)];
    const std::array<Index, 3> pos = {ci.i, ci.j, ci.k};
    const std::array<Index, 3> ext = {d.nx, d.ny, d.nz};
    const std::array<Index, 3> stride = {d.ny * d.nz, d.nz, 1};
    for (int dir = 0; dir < 6; ++dir)
    {
      const int axis = dir / 2;
      const bool up = dir % 2 == 1;
      const bool outside = up ? pos[axis] == ext[axis] - 1 : pos[axis] == 0;
      if (outside)
      {
        s.neighbor[dir] = -1;
        s.coupling[dir] = Coupling::None;
        if (axis == 0 && up && a == Label::PosCollector)
          s.coupling[dir] = Coupling::Charge;
        if (axis == 0 && !up && a == Label::NegCollector)
          s.coupling[dir] = Coupling::Ground;
        continue;
      }
      const Index nb = cell + (up ? stride[axis] : -stride[axis]);
      const Label b = geometry_.label(nb);
      s.neighbor[dir] = nb;
      switch (classify_pair(a, b))
      {
      case FaceKind::Interior: s.coupling[dir] = Coupling::TwoPoint; break;
      case FaceKind::ElectrolyteParticle:
        s.coupling[dir] = is_electrode(a) ? Coupling::ParticleSide : Coupling::ElectrolyteSide;
        break;
      case FaceKind::CollectorContact:
        // current collectors block both fluxes towards the electrolyte
        s.coupling[dir] = (a == Label::Electrolyte || b == Label::Electrolyte) ? Coupling::None
                                                                               : Coupling::TwoPoint;
        break;
      default: s.coupling[dir] = Coupling::None; break;
      }
    }
  }
  build_jacobian_pattern();
}

BatterySpaceOperator::Context BatterySpaceOperator::context(const Parameter &mu) const
{
  if (!(mu.temperature > 0.0) || !std::isfinite(mu.charge_rate))
    throw ConfigError("invalid parameter: temperature must be positive and charge rate finite");
  Context ctx;
  for (Label l : all_labels)
  {
    ctx.coefficients[idx(l)] = materials_.coefficients(l, mu.temperature);
    const Material &m = materials_[l];
    ctx.kinetics[idx(l)] = Kinetics{m.ocp, m.reaction_rate, m.c_max, mu.temperature, constants_};
  }
  ctx.charge_rate = mu.charge_rate;
  ctx.inv_h = 1.0 / geometry_.spacing();
  return ctx;
}

void BatterySpaceOperator::cell_rows(Index cell, const LocalValues &v, const Context &ctx,
                                     double &c_row, double &phi_row, LocalJacobian *jac) const
{
  const CellStencil &s = stencils_[static_cast<std::size_t>(cell)];
  const Label a = geometry_.label(cell);
  const FluxCoefficients &ka = ctx.coefficients[idx(a)];
  const double inv_h = ctx.inv_h;
  const double inv_h2 = inv_h * inv_h;
  const double inv_f = 1.0 / constants_.faraday;
  c_row = 0.0;
  phi_row = 0.0;
  if (jac)
    *jac = LocalJacobian{};

  for (int dir = 0; dir < 6; ++dir)
  {
    const int slot = dir + 1;
    if (terms_ != Terms::All)
    {
      const bool interface = s.coupling[dir] == Coupling::ParticleSide || s.coupling[dir] == Coupling::ElectrolyteSide;
      if (interface != (terms_ == Terms::Interface))
        continue;
    }
    switch (s.coupling[dir])
    {
    case Coupling::None: break;

    case Coupling::TwoPoint: {
      const FluxCoefficients &kb = ctx.coefficients[idx(geometry_.label(s.neighbor[dir]))];
      const double alpha = harmonic_mean(ka.alpha, kb.alpha);
      const double beta = harmonic_mean(ka.beta, kb.beta);
      const double gamma = harmonic_mean(ka.gamma, kb.gamma);
      const double delta = harmonic_mean(ka.delta, kb.delta);
      const double dc = v.c[slot] - v.c[0];
      const double dphi = v.phi[slot] - v.phi[0];
      const double mass_flux = -(alpha * dc + beta * dphi) * inv_h;
      const double current = -(gamma * dc + delta * dphi) * inv_h;
      c_row += mass_flux * inv_h;
      phi_row += current * inv_h;
      if (jac)
      {
        jac->c_by_c[slot] -= alpha * inv_h2;
        jac->c_by_c[0] += alpha * inv_h2;
        jac->c_by_phi[slot] -= beta * inv_h2;
        jac->c_by_phi[0] += beta * inv_h2;
        jac->phi_by_c[slot] -= gamma * inv_h2;
        jac->phi_by_c[0] += gamma * inv_h2;
        jac->phi_by_phi[slot] -= delta * inv_h2;
        jac->phi_by_phi[0] += delta * inv_h2;
      }
      break;
    }

    case Coupling::ParticleSide:
    case Coupling::ElectrolyteSide: {
      // n points into the electrolyte; the particle sees +j, the electrolyte -j
      const bool particle_here = s.coupling[dir] == Coupling::ParticleSide;
      const int e = particle_here ? slot : 0;
      const int p = particle_here ? 0 : slot;
      const Label particle = particle_here ? a : geometry_.label(s.neighbor[dir]);
      const Kinetics &kin = ctx.kinetics[idx(particle)];
      const double sign = particle_here ? 1.0 : -1.0;
      if (jac)
      {
        const ButlerVolmerGradient g = butler_volmer_gradient(kin, v.c[e], v.c[p], v.phi[e], v.phi[p]);
        c_row += sign * (g.value * inv_f) * inv_h;
        phi_row += sign * g.value * inv_h;
        const double sc = sign * inv_f * inv_h;
        const double sp = sign * inv_h;
        jac->c_by_c[e] += sc * g.d_c_e;
        jac->c_by_c[p] += sc * g.d_c_s;
        jac->c_by_phi[e] += sc * g.d_phi_e;
        jac->c_by_phi[p] += sc * g.d_phi_s;
        jac->phi_by_c[e] += sp * g.d_c_e;
        jac->phi_by_c[p] += sp * g.d_c_s;
        jac->phi_by_phi[e] += sp * g.d_phi_e;
        jac->phi_by_phi[p] += sp * g.d_phi_s;
      }
      else
      {
        const double j = butler_volmer(kin, v.c[e], v.c[p], v.phi[e], v.phi[p]);
        c_row += sign * (j * inv_f) * inv_h;
        phi_row += sign * j * inv_h;
      }
      break;
    }

    case Coupling::Charge: phi_row += -ctx.charge_rate * inv_h; break;

    case Coupling::Ground: {
      // ghost value -phi mirrors phi = 0 onto the face
      phi_row += (2.0 * ka.delta * v.phi[0] * inv_h) * inv_h;
      if (jac)
        jac->phi_by_phi[0] += 2.0 * ka.delta * inv_h2;
      break;
    }
    }
  }
}

void BatterySpaceOperator::gather(Index cell, const double *u, LocalValues &v) const
{
  const CellStencil &s = stencils_[static_cast<std::size_t>(cell)];
  const Index n = layout_.cells();
  v.c[0] = u[cell];
  v.phi[0] = u[n + cell];
  for (int dir = 0; dir < 6; ++dir)
  {
    const Index nb = s.neighbor[dir];
    v.c[dir + 1] = nb >= 0 ? u[nb] : 0.0;
    v.phi[dir + 1] = nb >= 0 ? u[n + nb] : 0.0;
  }
}

Eigen::VectorXd BatterySpaceOperator::evaluate(const Eigen::Ref<const Eigen::VectorXd> &u,
                                               const Parameter &mu) const
{
  if (u.size() != layout_.size())
    throw ConfigError("space operator: state has " + std::to_string(u.size()) + " entries, expected " +
                      std::to_string(layout_.size()));
  const Context ctx = context(mu);
  const Index n = layout_.cells();
  Eigen::VectorXd out(layout_.size());
  LocalValues v;
  for (Index cell = 0; cell < n; ++cell)
  {
    gather(cell, u.data(), v);
    cell_rows(cell, v, ctx, out[cell], out[n + cell], nullptr);
  }
  return out;
}

void BatterySpaceOperator::build_jacobian_pattern()
{
  const Index n = layout_.cells();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(28 * n));
  for (Index cell = 0; cell < n; ++cell)
  {
    for (Index row : {cell, n + cell})
      for (Index col : stencil(row))
        entries.emplace_back(row, col, 1.0);
  }
  pattern_.resize(2 * n, 2 * n);
  pattern_.setFromTriplets(entries.begin(), entries.end());
  pattern_.makeCompressed();
}

std::vector<Index> BatterySpaceOperator::stencil(Index dof) const
{
  if (dof < 0 || dof >= layout_.size())
    throw ConfigError("DOF index " + std::to_string(dof) + " out of range");
  const Index cell = layout_.cell_of(dof);
  const CellStencil &s = stencils_[static_cast<std::size_t>(cell)];
  std::vector<Index> out;
  out.reserve(14);
  for (Field f : {Field::Concentration, Field::Potential})
    for (int slot : sorted_slots)
    {
      const Index c = slot == 0 ? cell : s.neighbor[slot - 1];
      if (c >= 0)
        out.push_back(layout_.dof(f, c));
    }
  return out;
}

SparseMatrix BatterySpaceOperator::assemble_jacobian(const Eigen::Ref<const Eigen::VectorXd> &u,
                                                     const Parameter &mu) const
{
  if (u.size() != layout_.size())
    throw ConfigError("space operator: state dimension mismatch");
  const Context ctx = context(mu);
  const Index n = layout_.cells();
  SparseMatrix jac = pattern_;
  LocalValues v;
  LocalJacobian lj;
  double c_row = 0.0;
  double phi_row = 0.0;
  for (Index cell = 0; cell < n; ++cell)
  {
    gather(cell, u.data(), v);
    cell_rows(cell, v, ctx, c_row, phi_row, &lj);
    const CellStencil &s = stencils_[static_cast<std::size_t>(cell)];
    for (const auto &[row, by_c, by_phi] :
         {std::tuple{cell, &lj.c_by_c, &lj.c_by_phi}, std::tuple{n + cell, &lj.phi_by_c, &lj.phi_by_phi}})
    {
      double *values = jac.valuePtr() + jac.outerIndexPtr()[row];
      int k = 0;
      for (const auto *block : {by_c, by_phi})
        for (int slot : sorted_slots)
          if (slot == 0 || s.neighbor[slot - 1] >= 0)
            values[k++] = (*block)[slot];
    }
  }
  return jac;
}

VectorArray BatterySpaceOperator::apply(const VectorArray &u, const Parameter &mu) const
{
  check_source(u);
  Eigen::MatrixXd out(layout_.size(), u.size());
  for (Index col = 0; col < u.size(); ++col)
    out.col(col) = evaluate(u.data().col(col), mu);
  return VectorArray(range_space(), std::move(out));
}

std::shared_ptr<const MatrixOperator> BatterySpaceOperator::jacobian(const VectorArray &u,
                                                                     const Parameter &mu) const
{
  check_source(u);
  if (u.size() != 1)
    throw ConfigError("jacobian: expected a single state");
  return std::make_shared<const MatrixOperator>(assemble_jacobian(u.data().col(0), mu), source_space(),
                                                range_space());
}

std::shared_ptr<const BatterySpaceOperator> BatterySpaceOperator::part(Terms terms) const
{
  auto copy = std::make_shared<BatterySpaceOperator>(*this);
  copy->terms_ = terms;
  return copy;
}

std::optional<Operator::AffineSplitting> BatterySpaceOperator::affine_splitting() const
{
  if (terms_ != Terms::All)
    return std::nullopt;
  const auto affine = part(Terms::Affine);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(layout_.size());
  // only the electrolyte's gamma depends on T, and it enters linearly
  const SparseMatrix j1 = affine->assemble_jacobian(zero, {0.0, 1.0});
  const SparseMatrix j2 = affine->assemble_jacobian(zero, {0.0, 2.0});
  SparseMatrix per_kelvin = j2 - j1;
  SparseMatrix constant = j1 - per_kelvin;
  per_kelvin.prune(0.0);
  constant.prune(0.0);
  Eigen::MatrixXd shifts = Eigen::MatrixXd::Zero(layout_.size(), 3);
  shifts.col(2) = affine->evaluate(zero, {1.0, 1.0});
  const VectorSpace &space = layout_.product_space();
  std::vector<std::shared_ptr<const MatrixOperator>> matrices{
    std::make_shared<const MatrixOperator>(std::move(constant), space),
    std::make_shared<const MatrixOperator>(std::move(per_kelvin), space),
    std::make_shared<const MatrixOperator>(SparseMatrix(layout_.size(), layout_.size()), space)};
  auto coefficients = [](const Parameter &mu) {
    Eigen::VectorXd theta(3);
    theta << 1.0, mu.temperature, mu.charge_rate;
    return theta;
  };
  return AffineSplitting{std::make_shared<const AffineOperator>(std::move(matrices), VectorArray(space, std::move(shifts)),
                                                                 coefficients),
                         part(Terms::Interface)};
}

BoundaryCurrents BatterySpaceOperator::boundary_currents(const Eigen::Ref<const Eigen::VectorXd> &u,
                                                         const Parameter &mu) const
{
  const Context ctx = context(mu);
  const Index n = layout_.cells();
  const double area = geometry_.face_area();
  BoundaryCurrents out;
  for (Index cell = 0; cell < n; ++cell)
  {
    const CellStencil &s = stencils_[static_cast<std::size_t>(cell)];
    for (int dir = 0; dir < 6; ++dir)
    {
      if (s.coupling[dir] == Coupling::Charge)
        out.charge += -ctx.charge_rate * area;
      else if (s.coupling[dir] == Coupling::Ground)
        out.ground += 2.0 * ctx.coefficients[idx(geometry_.label(cell))].delta * u[n + cell] * ctx.inv_h * area;
    }
  }
  return out;
}

ParametricVector BatterySpaceOperator::initial_data() const
{
  const Index n = layout_.cells();
  auto equilibrium = [&](Label l) {
    const Material &m = materials_[l];
    return open_circuit_potential(m.ocp, m.c0 / m.c_max);
  };
  const double phi_e = -equilibrium(Label::NegElectrode);
  const double phi_pos = phi_e + equilibrium(Label::PosElectrode);
  Eigen::MatrixXd components = Eigen::MatrixXd::Zero(2 * n, 3);
  for (Index cell = 0; cell < n; ++cell)
  {
    const Label l = geometry_.label(cell);
    components(cell, 0) = materials_[l].c0;
    const bool positive_side = l == Label::PosElectrode || l == Label::PosCollector;
    components(n + cell, 0) = l == Label::Electrolyte ? phi_e : positive_side ? phi_pos : 0.0;
    components(n + cell, 1) = l == Label::Electrolyte || positive_side ? 1.0 : 0.0;
    components(n + cell, 2) = positive_side ? 1.0 : 0.0;
  }

  // Overpotentials carrying the applied current uniformly across each
  // electrode's interface at the initial concentrations.
  std::array<double, 2> exchange{};
  std::array<Index, 2> faces{};
  for (Index cell = 0; cell < n; ++cell)
  {
    const Label l = geometry_.label(cell);
    if (!is_electrode(l))
      continue;
    const std::size_t e = l == Label::NegElectrode ? 0 : 1;
    for (Coupling c : stencils_[static_cast<std::size_t>(cell)].coupling)
      faces[e] += c == Coupling::ParticleSide ? 1 : 0;
  }
  const double c_e = materials_[Label::Electrolyte].c0;
  for (Label l : {Label::NegElectrode, Label::PosElectrode})
  {
    const Material &m = materials_[l];
    exchange[l == Label::NegElectrode ? 0 : 1] = 2.0 * m.reaction_rate * std::sqrt(c_e * m.c0 * (m.c_max - m.c0));
  }
  const double cross_section = static_cast<double>(geometry_.dims().ny * geometry_.dims().nz);
  const PhysicalConstants k = constants_;
  auto coefficients = [=](const Parameter &mu) {
    const double thermal = 2.0 * k.gas_constant * mu.temperature / k.faraday;
    auto eta = [&](std::size_t e) {
      if (faces[e] == 0 || !(exchange[e] > 0.0))
        return 0.0;
      return thermal * std::asinh(mu.charge_rate * cross_section / static_cast<double>(faces[e]) / exchange[e]);
    };
    Eigen::VectorXd theta(3);
    // current enters the particles on the negative side and leaves them on the positive side
    theta << 1.0, eta(0), eta(1);
    return theta;
  };
  return ParametricVector(VectorArray(layout_.product_space(), std::move(components)), coefficients);
}

Eigen::VectorXd BatterySpaceOperator::initial_guess(const Parameter &mu) const
{
  return initial_data().evaluate(mu).data().col(0);
}

// ---------------------------------------------------------------------------
// Restricted operator

namespace
{

class RestrictedBatteryOperator : public Operator
{
public:
  RestrictedBatteryOperator(std::shared_ptr<const BatterySpaceOperator> parent, std::vector<Index> rows,
                            const std::vector<Index> &source_dofs)
    : parent_(std::move(parent)), rows_(std::move(rows)),
      source_(VectorSpace::euclidean(static_cast<Index>(source_dofs.size()))),
      range_(VectorSpace::euclidean(static_cast<Index>(rows_.size())))
  {
    const DofLayout &layout = parent_->layout();
    auto local = [&](Index dof) -> Index {
      const auto it = std::lower_bound(source_dofs.begin(), source_dofs.end(), dof);
      return static_cast<Index>(it - source_dofs.begin());
    };
    locals_.resize(rows_.size());
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t r = 0; r < rows_.size(); ++r)
    {
      const Index cell = layout.cell_of(rows_[r]);
      const auto &s = parent_->cell_stencil(cell);
      Local &l = locals_[r];
      for (int slot = 0; slot < 7; ++slot)
      {
        const Index c = slot == 0 ? cell : s.neighbor[slot - 1];
        l.c[slot] = c >= 0 ? local(layout.dof(Field::Concentration, c)) : -1;
        l.phi[slot] = c >= 0 ? local(layout.dof(Field::Potential, c)) : -1;
        if (c >= 0)
        {
          entries.emplace_back(static_cast<Index>(r), l.c[slot], 1.0);
          entries.emplace_back(static_cast<Index>(r), l.phi[slot], 1.0);
        }
      }
    }
    pattern_.resize(range_.dim, source_.dim);
    pattern_.setFromTriplets(entries.begin(), entries.end());
    pattern_.makeCompressed();
  }

  const VectorSpace &source_space() const override { return source_; }
  const VectorSpace &range_space() const override { return range_; }

  VectorArray apply(const VectorArray &u, const Parameter &mu) const override
  {
    check_source(u);
    const auto ctx = parent_->context(mu);
    const DofLayout &layout = parent_->layout();
    Eigen::MatrixXd out(range_.dim, u.size());
    BatterySpaceOperator::LocalValues v;
    double c_row = 0.0;
    double phi_row = 0.0;
    for (Index col = 0; col < u.size(); ++col)
    {
      const double *src = u.data().col(col).data();
      for (std::size_t r = 0; r < rows_.size(); ++r)
      {
        gather(r, src, v);
        parent_->cell_rows(layout.cell_of(rows_[r]), v, ctx, c_row, phi_row, nullptr);
        out(static_cast<Index>(r), col) =
          layout.field_of(rows_[r]) == Field::Concentration ? c_row : phi_row;
      }
    }
    return VectorArray(range_, std::move(out));
  }

  std::shared_ptr<const MatrixOperator> jacobian(const VectorArray &u, const Parameter &mu) const override
  {
    check_source(u);
    const auto ctx = parent_->context(mu);
    const DofLayout &layout = parent_->layout();
    SparseMatrix jac = pattern_;
    BatterySpaceOperator::LocalValues v;
    BatterySpaceOperator::LocalJacobian lj;
    double c_row = 0.0;
    double phi_row = 0.0;
    const double *src = u.data().col(0).data();
    for (std::size_t r = 0; r < rows_.size(); ++r)
    {
      gather(r, src, v);
      parent_->cell_rows(layout.cell_of(rows_[r]), v, ctx, c_row, phi_row, &lj);
      const bool c_field = layout.field_of(rows_[r]) == Field::Concentration;
      const auto &by_c = c_field ? lj.c_by_c : lj.phi_by_c;
      const auto &by_phi = c_field ? lj.c_by_phi : lj.phi_by_phi;
      for (int slot = 0; slot < 7; ++slot)
      {
        if (locals_[r].c[slot] < 0)
          continue;
        jac.coeffRef(static_cast<Index>(r), locals_[r].c[slot]) = by_c[slot];
        jac.coeffRef(static_cast<Index>(r), locals_[r].phi[slot]) = by_phi[slot];
      }
    }
    return std::make_shared<const MatrixOperator>(std::move(jac), source_, range_);
  }

private:
  struct Local
  {
    std::array<Index, 7> c{};
    std::array<Index, 7> phi{};
  };

  void gather(std::size_t r, const double *src, BatterySpaceOperator::LocalValues &v) const
  {
    const Local &l = locals_[r];
    for (int slot = 0; slot < 7; ++slot)
    {
      v.c[slot] = l.c[slot] >= 0 ? src[l.c[slot]] : 0.0;
      v.phi[slot] = l.phi[slot] >= 0 ? src[l.phi[slot]] : 0.0;
    }
  }

  std::shared_ptr<const BatterySpaceOperator> parent_;
  std::vector<Index> rows_;
  std::vector<Local> locals_;
  VectorSpace source_;
  VectorSpace range_;
  SparseMatrix pattern_;
};

} // namespace

Restriction BatterySpaceOperator::restricted(std::span<const Index> dofs) const
{
  std::vector<Index> rows(dofs.begin(), dofs.end());
  std::vector<Index> sorted = rows;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("restriction: duplicate DOF indices");
  std::vector<Index> source;
  source.reserve(rows.size() * 14);
  for (Index dof : rows)
  {
    const auto st = stencil(dof); // validates the index
    source.insert(source.end(), st.begin(), st.end());
  }
  std::sort(source.begin(), source.end());
  source.erase(std::unique(source.begin(), source.end()), source.end());

  // the restricted operator shares the parent's geometry when it is shared-owned
  auto parent = std::make_shared<const BatterySpaceOperator>(*this);
  auto op = std::make_shared<const RestrictedBatteryOperator>(std::move(parent), std::move(rows), source);
  return {std::move(op), std::move(source)};
}

std::shared_ptr<const MatrixOperator> concentration_selector(const DofLayout &layout)
{
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.size());
  d.head(layout.cells()).setOnes();
  return MatrixOperator::diagonal(d, layout.product_space());
}

InstationaryDiscretization discretize(std::shared_ptr<const BatterySpaceOperator> op, Index steps, double dt,
                                      NewtonSettings newton)
{
  const DofLayout &layout = op->layout();
  ParametricVector guess = op->initial_data();
  auto mass = concentration_selector(layout);
  return InstationaryDiscretization(std::move(op), std::move(mass), std::move(guess), steps, dt, newton);
}

} // namespace morcell
