#include "morcell/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "morcell/errors.hpp"
#include "morcell/random.hpp"

namespace morcell
{

std::string_view label_token(Label label)
{
  switch (label)
  {
  case Label::Electrolyte: return "E";
  case Label::PosElectrode: return "PE";
  case Label::NegElectrode: return "NE";
  case Label::PosCollector: return "PC";
  case Label::NegCollector: return "NC";
  }
  return "?";
}

Label label_from_token(std::string_view token)
{
  for (Label l : all_labels)
    if (label_token(l) == token)
      return l;
  throw ConfigError("unknown label token '" + std::string(token) + "'");
}

std::string_view face_kind_name(FaceKind kind)
{
  switch (kind)
  {
  case FaceKind::Interior: return "Interior";
  case FaceKind::ElectrolyteParticle: return "ElectrolyteParticle";
  case FaceKind::CollectorContact: return "CollectorContact";
  case FaceKind::ExternalBoundary: return "ExternalBoundary";
  case FaceKind::ChargeBoundary: return "ChargeBoundary";
  case FaceKind::GroundBoundary: return "GroundBoundary";
  }
  return "?";
}

VoxelGeometry::VoxelGeometry(GridDims dims, double spacing, std::vector<Label> labels,
                             std::uint64_t seed)
  : dims_(dims), spacing_(spacing), labels_(std::move(labels)), seed_(seed)
{
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
    throw ConfigError("grid dimensions must be positive");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ConfigError("grid spacing must be positive");
  if (static_cast<Index>(labels_.size()) != dims.cells())
    throw ConfigError("label count " + std::to_string(labels_.size()) + " does not match " +
                      std::to_string(dims.cells()) + " cells");
}

Index VoxelGeometry::count(Label label) const
{
  return std::count(labels_.begin(), labels_.end(), label);
}

namespace
{

// Marks exactly round(fill * slab_cells) cells of the x-range [begin, end) with
// `particle`, the remaining ones stay electrolyte.
void fill_slab(std::vector<Label> &labels, const GridDims &dims, Index begin, Index end,
               double fill, Label particle, std::mt19937_64 &rng)
{
  const Index layer = dims.ny * dims.nz;
  const Index slab_cells = (end - begin) * layer;
  if (slab_cells == 0)
    return;
  std::vector<Index> cells(static_cast<std::size_t>(slab_cells));
  std::iota(cells.begin(), cells.end(), begin * layer);
  shuffle(cells, rng);
  const auto particles = static_cast<Index>(std::llround(fill * static_cast<double>(slab_cells)));
  for (Index n = 0; n < particles; ++n)
    labels[static_cast<std::size_t>(cells[static_cast<std::size_t>(n)])] = particle;
}

} // namespace

VoxelGeometry generate_geometry(const GridDims &dims, const LayerLayout &layout, std::uint64_t seed,
                                double domain_length)
{
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
    throw ConfigError("grid dimensions must be positive");
  if (layout.total_width() != dims.nx)
    throw ConfigError("layer widths sum to " + std::to_string(layout.total_width()) +
                      " but nx = " + std::to_string(dims.nx));
  const std::array<Index, 5> widths = {layout.neg_collector, layout.neg_electrode,
                                       layout.separator, layout.pos_electrode,
                                       layout.pos_collector};
  if (std::any_of(widths.begin(), widths.end(), [](Index w) { return w < 0; }))
    throw ConfigError("layer widths must be non-negative");
  for (double f : {layout.fill_pos, layout.fill_neg})
    if (!(f >= 0.0 && f <= 1.0))
      throw ConfigError("fill fractions must lie in [0, 1]");

  const Index layer = dims.ny * dims.nz;
  std::vector<Label> labels(static_cast<std::size_t>(dims.cells()), Label::Electrolyte);
  auto set_slab = [&](Index begin, Index end, Label l) {
    std::fill(labels.begin() + begin * layer, labels.begin() + end * layer, l);
  };

  const Index neg_begin = layout.neg_collector;
  const Index neg_end = neg_begin + layout.neg_electrode;
  const Index pos_begin = neg_end + layout.separator;
  const Index pos_end = pos_begin + layout.pos_electrode;
  set_slab(0, neg_begin, Label::NegCollector);
  set_slab(pos_end, dims.nx, Label::PosCollector);

  std::mt19937_64 rng(seed);
  fill_slab(labels, dims, neg_begin, neg_end, layout.fill_neg, Label::NegElectrode, rng);
  fill_slab(labels, dims, pos_begin, pos_end, layout.fill_pos, Label::PosElectrode, rng);

  return VoxelGeometry(dims, domain_length / static_cast<double>(dims.nx), std::move(labels), seed);
}

FaceKind classify_pair(Label a, Label b)
{
  if (a == b)
    return FaceKind::Interior;
  if (a > b)
    std::swap(a, b);
  // Label order: E < PE < NE < PC < NC
  switch (a)
  {
  case Label::Electrolyte:
    return is_electrode(b) ? FaceKind::ElectrolyteParticle : FaceKind::CollectorContact;
  case Label::PosElectrode:
    if (b == Label::PosCollector)
      return FaceKind::CollectorContact;
    break;
  case Label::NegElectrode:
    if (b == Label::NegCollector)
      return FaceKind::CollectorContact;
    break;
  default: break;
  }
  throw GeometryError("short circuit: " + std::string(label_token(a)) + " cell adjacent to " +
                      std::string(label_token(b)) + " cell");
}

std::vector<Face> classify_faces(const VoxelGeometry &geometry)
{
  const GridDims &d = geometry.dims();
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(3 * d.cells() + 2 * (d.nx * d.ny + d.ny * d.nz + d.nx * d.nz)));

  const std::array<CellIndex, 3> step = {CellIndex{1, 0, 0}, CellIndex{0, 1, 0}, CellIndex{0, 0, 1}};
  const std::array<Index, 3> extent = {d.nx, d.ny, d.nz};

  auto interior = [&](Index lower, Index upper, Axis axis) {
    Face f;
    f.axis = axis;
    f.lower = lower;
    f.upper = upper;
    const Label a = geometry.label(lower);
    const Label b = geometry.label(upper);
    try
    {
      f.kind = classify_pair(a, b);
    }
    catch (const GeometryError &e)
    {
      const CellIndex c = geometry.cell_index(lower);
      throw GeometryError(std::string(e.what()) + " at cell (" + std::to_string(c.i) + ", " +
                          std::to_string(c.j) + ", " + std::to_string(c.k) + ")");
    }
    if (f.kind == FaceKind::ElectrolyteParticle)
      f.particle = is_electrode(a) ? lower : upper;
    faces.push_back(f);
  };

  for (int a = 0; a < 3; ++a)
    for (Index i = 0; i < d.nx; ++i)
      for (Index j = 0; j < d.ny; ++j)
        for (Index k = 0; k < d.nz; ++k)
        {
          const CellIndex c{i, j, k};
          const CellIndex n{i + step[a].i, j + step[a].j, k + step[a].k};
          const std::array<Index, 3> nc = {n.i, n.j, n.k};
          if (nc[a] < extent[a])
            interior(geometry.linear_index(c), geometry.linear_index(n), static_cast<Axis>(a));
        }

  for (int a = 0; a < 3; ++a)
    for (Index i = 0; i < d.nx; ++i)
      for (Index j = 0; j < d.ny; ++j)
        for (Index k = 0; k < d.nz; ++k)
        {
          const std::array<Index, 3> c = {i, j, k};
          const Index cell = geometry.linear_index({i, j, k});
          const Label l = geometry.label(cell);
          if (c[a] == 0)
          {
            Face f;
            f.axis = static_cast<Axis>(a);
            f.upper = cell;
            f.kind = (a == 0 && l == Label::NegCollector) ? FaceKind::GroundBoundary
                                                          : FaceKind::ExternalBoundary;
            faces.push_back(f);
          }
          if (c[a] == extent[a] - 1)
          {
            Face f;
            f.axis = static_cast<Axis>(a);
            f.lower = cell;
            f.kind = (a == 0 && l == Label::PosCollector) ? FaceKind::ChargeBoundary
                                                          : FaceKind::ExternalBoundary;
            faces.push_back(f);
          }
        }
  return faces;
}

double volume_fraction(const VoxelGeometry &geometry, Label label)
{
  const GridDims &d = geometry.dims();
  const Index layer = d.ny * d.nz;
  Index first = -1;
  Index last = -1;
  Index hits = 0;
  for (Index cell = 0; cell < d.cells(); ++cell)
  {
    if (geometry.label(cell) != label)
      continue;
    const Index i = cell / layer;
    if (first < 0)
      first = i;
    last = i;
    ++hits;
  }
  if (hits == 0)
    return 0.0;
  return static_cast<double>(hits) / static_cast<double>((last - first + 1) * layer);
}

void write_geometry(const VoxelGeometry &geometry, std::ostream &out)
{
  const GridDims &d = geometry.dims();
  out << "dims " << d.nx << ' ' << d.ny << ' ' << d.nz << '\n';
  out << "spacing " << std::setprecision(17) << geometry.spacing() << '\n';
  out << "seed " << geometry.seed() << '\n';
  for (Index row = 0; row < d.nx * d.ny; ++row)
  {
    for (Index k = 0; k < d.nz; ++k)
    {
      if (k > 0)
        out << ' ';
      out << label_token(geometry.label(row * d.nz + k));
    }
    out << '\n';
  }
}

namespace
{

// Whitespace tokenizer that remembers the line of the last token.
class Tokens
{
public:
  explicit Tokens(std::istream &in) : in_(in) {}

  bool next(std::string &token)
  {
    while (!(line_stream_ >> token))
    {
      std::string line;
      if (!std::getline(in_, line))
        return false;
      ++line_;
      line_stream_.clear();
      line_stream_.str(line);
    }
    return true;
  }

  std::string expect(const char *what)
  {
    std::string token;
    if (!next(token))
      throw ParseError(std::string("unexpected end of file, expected ") + what, line_);
    return token;
  }

  template <typename T> T number(const char *what)
  {
    const std::string token = expect(what);
    std::istringstream is(token);
    T value{};
    if (!(is >> value) || !is.eof())
      throw ParseError(std::string("invalid ") + what + " '" + token + "'", line_);
    return value;
  }

  void keyword(const char *kw)
  {
    const std::string token = expect(kw);
    if (token != kw)
      throw ParseError("expected '" + std::string(kw) + "', found '" + token + "'", line_);
  }

  std::size_t line() const { return line_; }

private:
  std::istream &in_;
  std::istringstream line_stream_;
  std::size_t line_ = 0;
};

} // namespace

VoxelGeometry read_geometry(std::istream &in)
{
  Tokens tokens(in);
  tokens.keyword("dims");
  GridDims d;
  d.nx = tokens.number<Index>("nx");
  d.ny = tokens.number<Index>("ny");
  d.nz = tokens.number<Index>("nz");
  if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0)
    throw ParseError("grid dimensions must be positive", tokens.line());
  tokens.keyword("spacing");
  const auto spacing = tokens.number<double>("spacing");
  if (!(spacing > 0.0))
    throw ParseError("spacing must be positive", tokens.line());
  tokens.keyword("seed");
  const auto seed = tokens.number<std::uint64_t>("seed");

  std::vector<Label> labels;
  labels.reserve(static_cast<std::size_t>(d.cells()));
  std::string token;
  while (static_cast<Index>(labels.size()) < d.cells())
  {
    if (!tokens.next(token))
      throw ParseError("truncated label data: expected " + std::to_string(d.cells()) +
                           " labels, found " + std::to_string(labels.size()),
                       tokens.line());
    try
    {
      labels.push_back(label_from_token(token));
    }
    catch (const ConfigError &)
    {
      throw ParseError("unknown label token '" + token + "'", tokens.line());
    }
  }
  if (tokens.next(token))
    throw ParseError("trailing data '" + token + "'", tokens.line());
  return VoxelGeometry(d, spacing, std::move(labels), seed);
}

void save_geometry(const VoxelGeometry &geometry, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  write_geometry(geometry, out);
  if (!out)
    throw IoError("failed writing " + path.string());
}

VoxelGeometry load_geometry(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  return read_geometry(in);
}

} // namespace morcell
