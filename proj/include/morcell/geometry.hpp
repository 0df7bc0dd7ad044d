#ifndef MORCELL_GEOMETRY_HPP
#define MORCELL_GEOMETRY_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace morcell
{

using Index = Eigen::Index;

enum class Label : std::uint8_t
{
  Electrolyte,
  PosElectrode,
  NegElectrode,
  PosCollector,
  NegCollector
};

inline constexpr std::array<Label, 5> all_labels = {Label::Electrolyte, Label::PosElectrode,
                                                    Label::NegElectrode, Label::PosCollector,
                                                    Label::NegCollector};

/// File token of a label: E, PE, NE, PC, NC.
std::string_view label_token(Label label);
/// Inverse of label_token. Throws ConfigError on an unknown token.
Label label_from_token(std::string_view token);

inline bool is_electrode(Label l) { return l == Label::PosElectrode || l == Label::NegElectrode; }
inline bool is_collector(Label l) { return l == Label::PosCollector || l == Label::NegCollector; }

struct GridDims
{
  Index nx = 0;
  Index ny = 0;
  Index nz = 0;

  Index cells() const { return nx * ny * nz; }
  bool operator==(const GridDims &) const = default;
};

struct CellIndex
{
  Index i = 0;
  Index j = 0;
  Index k = 0;

  bool operator==(const CellIndex &) const = default;
};

/// Slab widths along x (cells) and target particle fractions of both electrodes.
struct LayerLayout
{
  Index neg_collector = 0;
  Index neg_electrode = 0;
  Index separator = 0;
  Index pos_electrode = 0;
  Index pos_collector = 0;
  double fill_pos = 0.0;
  double fill_neg = 0.0;

  Index total_width() const
  {
    return neg_collector + neg_electrode + separator + pos_electrode + pos_collector;
  }
};

/// Labeled structured voxel grid with cubic cells. Cells are stored k-fastest,
/// x (index i) is the transport axis running from the negative to the positive side.
class VoxelGeometry
{
public:
  VoxelGeometry() = default;
  VoxelGeometry(GridDims dims, double spacing, std::vector<Label> labels, std::uint64_t seed);

  const GridDims &dims() const { return dims_; }
  Index cells() const { return dims_.cells(); }
  double spacing() const { return spacing_; }
  std::uint64_t seed() const { return seed_; }
  double cell_volume() const { return spacing_ * spacing_ * spacing_; }
  double face_area() const { return spacing_ * spacing_; }

  Index linear_index(const CellIndex &c) const { return (c.i * dims_.ny + c.j) * dims_.nz + c.k; }
  CellIndex cell_index(Index cell) const
  {
    const Index k = cell % dims_.nz;
    const Index j = (cell / dims_.nz) % dims_.ny;
    return {cell / (dims_.nz * dims_.ny), j, k};
  }

  Label label(Index cell) const { return labels_[static_cast<std::size_t>(cell)]; }
  Label label(const CellIndex &c) const { return label(linear_index(c)); }
  const std::vector<Label> &labels() const { return labels_; }

  Index count(Label label) const;

  bool operator==(const VoxelGeometry &) const = default;

private:
  GridDims dims_;
  double spacing_ = 1.0;
  std::vector<Label> labels_;
  std::uint64_t seed_ = 0;
};

/// Default x-extent of the computational domain in cm.
inline constexpr double default_domain_length = 4.8e-3;

/// Collector and separator slabs are uniform; inside each electrode slab exactly
/// round(f * slab_cells) cells carry the electrode label, chosen by a seeded
/// Fisher-Yates permutation. The negative slab is drawn before the positive one.
VoxelGeometry generate_geometry(const GridDims &dims, const LayerLayout &layout,
                                std::uint64_t seed,
                                double domain_length = default_domain_length);

enum class Axis : std::uint8_t
{
  X,
  Y,
  Z
};

enum class FaceKind : std::uint8_t
{
  Interior,
  ElectrolyteParticle,
  CollectorContact,
  ExternalBoundary,
  ChargeBoundary,
  GroundBoundary
};

std::string_view face_kind_name(FaceKind kind);

/// An axis-aligned face. `lower`/`upper` are the cells on the low/high coordinate
/// side; one of them is -1 for external faces. `particle` is set on
/// electrolyte-particle faces only.
struct Face
{
  FaceKind kind = FaceKind::Interior;
  Axis axis = Axis::X;
  Index lower = -1;
  Index upper = -1;
  Index particle = -1;
};

/// Classifies every face of the grid exactly once: interior faces first (x, y, z
/// sweeps), then external faces. Throws GeometryError on a short circuit, i.e.
/// cells of opposite sides (electrode or collector) sharing a face.
std::vector<Face> classify_faces(const VoxelGeometry &geometry);

/// Kind of the face between two face-adjacent cells with the given labels.
FaceKind classify_pair(Label a, Label b);

/// Share of `label` among the cells in the x-layers spanned by that label,
/// i.e. the particle fraction of an electrode slab. 0 if the label is absent.
double volume_fraction(const VoxelGeometry &geometry, Label label);

void save_geometry(const VoxelGeometry &geometry, const std::filesystem::path &path);
VoxelGeometry load_geometry(const std::filesystem::path &path);

void write_geometry(const VoxelGeometry &geometry, std::ostream &out);
VoxelGeometry read_geometry(std::istream &in);

} // namespace morcell

#endif // MORCELL_GEOMETRY_HPP
