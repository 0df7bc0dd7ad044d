#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "morcell/errors.hpp"
#include "support.hpp"

using namespace morcell;
using morcell::testing::line_geometry;

namespace
{

std::map<FaceKind, int> kind_counts(const std::vector<Face> &faces)
{
  std::map<FaceKind, int> n;
  for (const auto &f : faces)
    ++n[f.kind];
  return n;
}

Index count_in_slab(const VoxelGeometry &g, Label label, Index i0, Index i1)
{
  Index n = 0;
  for (Index cell = 0; cell < g.cells(); ++cell)
  {
    const Index i = g.cell_index(cell).i;
    n += (i >= i0 && i < i1 && g.label(cell) == label);
  }
  return n;
}

} // namespace

TEST_CASE("positive slab of 4000 cells holds exactly round(0.614 * 4000) particles")
{
  const auto g = generate_geometry({40, 20, 20}, {5, 10, 10, 10, 5, 0.614, 0.742}, 42);
  CHECK(count_in_slab(g, Label::PosElectrode, 25, 35) == 2456);
  CHECK(count_in_slab(g, Label::Electrolyte, 25, 35) == 4000 - 2456);
  CHECK(count_in_slab(g, Label::NegElectrode, 5, 15) == 2968);
  CHECK(g.count(Label::PosCollector) == 2000);
  CHECK(g.count(Label::NegCollector) == 2000);
  CHECK(count_in_slab(g, Label::Electrolyte, 15, 25) == 4000);
  CHECK(g.spacing() == doctest::Approx(1.2e-4).epsilon(1e-14));
}

TEST_CASE("zero and full fill fractions")
{
  const auto empty = generate_geometry({8, 3, 3}, {1, 2, 2, 2, 1, 0.0, 0.0}, 1);
  CHECK(empty.count(Label::PosElectrode) == 0);
  CHECK(empty.count(Label::NegElectrode) == 0);
  CHECK(empty.count(Label::Electrolyte) == 6 * 9);
  CHECK(volume_fraction(empty, Label::PosElectrode) == 0.0);

  const auto full = generate_geometry({8, 3, 3}, {1, 2, 2, 2, 1, 1.0, 1.0}, 1);
  CHECK(full.count(Label::PosElectrode) == 18);
  CHECK(full.count(Label::NegElectrode) == 18);
  CHECK(full.count(Label::Electrolyte) == 18);
  CHECK(volume_fraction(full, Label::PosElectrode) == 1.0);
}

TEST_CASE("generation is a pure function of its inputs")
{
  const LayerLayout layout{1, 2, 2, 2, 1, 0.5, 0.5};
  CHECK(generate_geometry({8, 4, 4}, layout, 3) == generate_geometry({8, 4, 4}, layout, 3));
  CHECK_FALSE(generate_geometry({8, 4, 4}, layout, 3) == generate_geometry({8, 4, 4}, layout, 4));
}

TEST_CASE("generation rejects inconsistent layouts")
{
  CHECK_THROWS_AS(generate_geometry({8, 2, 2}, {1, 2, 2, 2, 2, 0.5, 0.5}, 1), ConfigError);
  CHECK_THROWS_AS(generate_geometry({8, 2, 2}, {1, 2, 2, 2, 1, 1.5, 0.5}, 1), ConfigError);
}

TEST_CASE("negative fill fraction stays within one cell of the target")
{
  const auto g = generate_geometry({20, 10, 10}, {3, 5, 4, 5, 3, 0.614, 0.742}, 42);
  CHECK(std::abs(volume_fraction(g, Label::NegElectrode) - 0.742) <= 1.0 / 500.0);
  CHECK(std::abs(volume_fraction(g, Label::PosElectrode) - 0.614) <= 1.0 / 500.0);
}

TEST_CASE("two electrolyte cells have one interior and ten external faces")
{
  const auto faces = classify_faces(line_geometry({Label::Electrolyte, Label::Electrolyte}));
  auto n = kind_counts(faces);
  CHECK(faces.size() == 11);
  CHECK(n[FaceKind::Interior] == 1);
  CHECK(n[FaceKind::ExternalBoundary] == 10);
}

TEST_CASE("five subdomains in a row")
{
  const auto faces = classify_faces(morcell::testing::battery_line());
  std::vector<Face> x_interior;
  Face ground, charge;
  for (const auto &f : faces)
  {
    if (f.axis == Axis::X && f.lower >= 0 && f.upper >= 0)
      x_interior.push_back(f);
    if (f.kind == FaceKind::GroundBoundary)
      ground = f;
    if (f.kind == FaceKind::ChargeBoundary)
      charge = f;
  }
  REQUIRE(x_interior.size() == 4);
  CHECK(x_interior[0].kind == FaceKind::CollectorContact);
  CHECK(x_interior[1].kind == FaceKind::ElectrolyteParticle);
  CHECK(x_interior[1].particle == 1);
  CHECK(x_interior[2].kind == FaceKind::ElectrolyteParticle);
  CHECK(x_interior[2].particle == 3);
  CHECK(x_interior[3].kind == FaceKind::CollectorContact);
  CHECK(ground.upper == 0);
  CHECK(ground.lower == -1);
  CHECK(charge.lower == 4);
  CHECK(charge.upper == -1);
  auto n = kind_counts(faces);
  CHECK(n[FaceKind::GroundBoundary] == 1);
  CHECK(n[FaceKind::ChargeBoundary] == 1);
  CHECK(n[FaceKind::ExternalBoundary] == 20);
}

TEST_CASE("face kinds of label pairs")
{
  CHECK(classify_pair(Label::Electrolyte, Label::Electrolyte) == FaceKind::Interior);
  CHECK(classify_pair(Label::PosElectrode, Label::Electrolyte) == FaceKind::ElectrolyteParticle);
  CHECK(classify_pair(Label::NegCollector, Label::NegElectrode) == FaceKind::CollectorContact);
  CHECK(classify_pair(Label::PosCollector, Label::Electrolyte) == FaceKind::CollectorContact);
  CHECK_THROWS_AS(classify_pair(Label::PosElectrode, Label::NegElectrode), GeometryError);
  CHECK_THROWS_AS(classify_pair(Label::PosCollector, Label::NegElectrode), GeometryError);
}

TEST_CASE("adjacent electrodes of opposite sides are a short circuit")
{
  CHECK_THROWS_AS(classify_faces(line_geometry({Label::NegElectrode, Label::PosElectrode})), GeometryError);
}

TEST_CASE("every face is classified exactly once")
{
  const auto g = morcell::testing::small_cell({8, 4, 3}, 11);
  const auto faces = classify_faces(g);
  const Index nx = 8, ny = 4, nz = 3;
  const Index interior = 3 * nx * ny * nz - (nx * ny + ny * nz + nx * nz);
  const Index external = 2 * (nx * ny + ny * nz + nx * nz);
  CHECK(static_cast<Index>(faces.size()) == interior + external);

  std::map<std::tuple<int, Index, Index>, int> seen;
  Index internal_faces = 0;
  for (const auto &f : faces)
  {
    ++seen[{static_cast<int>(f.axis), f.lower, f.upper}];
    internal_faces += (f.lower >= 0 && f.upper >= 0);
    if (f.kind == FaceKind::ElectrolyteParticle)
    {
      REQUIRE((f.particle == f.lower || f.particle == f.upper));
      CHECK(is_electrode(g.label(f.particle)));
    }
  }
  CHECK(internal_faces == interior);
  // external faces share (axis, cell, -1) keys across the two sides only on 1-wide axes
  for (const auto &[key, n] : seen)
    if (std::get<1>(key) >= 0 && std::get<2>(key) >= 0)
      CHECK(n == 1);

  // per cell: six faces
  std::vector<int> per_cell(static_cast<std::size_t>(g.cells()), 0);
  for (const auto &f : faces)
  {
    if (f.lower >= 0)
      ++per_cell[static_cast<std::size_t>(f.lower)];
    if (f.upper >= 0)
      ++per_cell[static_cast<std::size_t>(f.upper)];
  }
  for (int n : per_cell)
    CHECK(n == 6);
}

TEST_CASE("uniform and empty slabs")
{
  const auto g = line_geometry({Label::NegCollector, Label::Electrolyte, Label::PosElectrode, Label::PosCollector});
  CHECK(volume_fraction(g, Label::PosElectrode) == 1.0);
  CHECK(volume_fraction(g, Label::NegElectrode) == 0.0);
}

TEST_CASE("save and load are inverse")
{
  const auto g = morcell::testing::small_cell({8, 4, 4}, 5);
  const auto dir = morcell::testing::scratch_dir("geometry");
  save_geometry(g, dir / "g.txt");
  const auto back = load_geometry(dir / "g.txt");
  CHECK(back == g);
  CHECK(back.spacing() == g.spacing());
}

TEST_CASE("malformed geometry files")
{
  std::ostringstream out;
  write_geometry(line_geometry({Label::Electrolyte, Label::PosElectrode, Label::PosCollector}), out);
  const std::string text = out.str();

  SUBCASE("truncated")
  {
    std::istringstream in(text.substr(0, text.rfind("PC")));
    CHECK_THROWS_AS(read_geometry(in), ParseError);
  }
  SUBCASE("unknown token")
  {
    std::string bad = text;
    bad.replace(bad.rfind("PE"), 2, "XX");
    std::istringstream in(bad);
    try
    {
      (void)read_geometry(in);
      FAIL("no error");
    }
    catch (const ParseError &e)
    {
      CHECK(std::string(e.what()).find("'XX'") != std::string::npos);
      CHECK(e.line() > 3);
    }
  }
  SUBCASE("missing file")
  {
    CHECK_THROWS_AS(load_geometry("/nonexistent/geometry.txt"), IoError);
  }
}

TEST_CASE("label tokens round trip")
{
  for (Label l : all_labels)
    CHECK(label_from_token(label_token(l)) == l);
  CHECK_THROWS_AS(label_from_token("Q"), ConfigError);
}
