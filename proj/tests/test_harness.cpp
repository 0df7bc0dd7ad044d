#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "morcell/experiment.hpp"
#include "morcell/metrics.hpp"
#include "morcell/storage.hpp"
#include "support.hpp"

using namespace morcell;
namespace fs = std::filesystem;

namespace
{

Trajectory two_cell_trajectory(std::initializer_list<std::array<double, 4>> states)
{
  Eigen::MatrixXd m(4, static_cast<Index>(states.size()));
  Index j = 0;
  for (const auto &s : states)
    m.col(j++) = Eigen::Vector4d(s[0], s[1], s[2], s[3]);
  Trajectory t;
  t.states = VectorArray(DofLayout(2, 0.125).product_space(), std::move(m));
  return t;
}

std::string slurp(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string &args)
{
  const std::string cmd = std::string(MORCELL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig tiny_config(const fs::path &output)
{
  ExperimentConfig c;
  c.dims = {8, 3, 3};
  c.steps = 2;
  c.training_grid = {2, 2};
  c.basis_sizes = {0, 2};
  c.test_count = 2;
  c.record_timings = false;
  c.output = output;
  return c;
}

} // namespace

TEST_CASE("relative L-infinity-L2 error on a two-cell hand case")
{
  const DofLayout layout(2, 0.125);
  // c = (1, 1) then (2, 2); phi = (1, 0) throughout
  const Trajectory detailed = two_cell_trajectory({{1, 1, 1, 0}, {2, 2, 1, 0}});
  const Trajectory frozen = two_cell_trajectory({{1, 1, 1, 0}, {1, 1, 1, 0}});
  CHECK(linfty_l2_norm(detailed, layout, Field::Concentration) == doctest::Approx(1.0));
  // max_t ||(1, 1)|| / max_t ||(2, 2)||
  CHECK(error_linfty_l2(detailed, frozen, layout, Field::Concentration) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(error_linfty_l2(detailed, frozen, layout, Field::Potential) == 0.0);
  CHECK(error_linfty_l2(detailed, detailed, layout, Field::Concentration) == 0.0);

  const Trajectory zero_phi = two_cell_trajectory({{1, 1, 0, 0}});
  CHECK_THROWS_AS(error_linfty_l2(zero_phi, zero_phi, layout, Field::Potential), EvaluationError);
  CHECK_THROWS_AS(error_linfty_l2(detailed, zero_phi, layout, Field::Concentration), ConfigError);
}

TEST_CASE("parameter sampling")
{
  const ParameterBox box;
  const auto a = sample_test_parameters(box, 20, 7);
  const auto b = sample_test_parameters(box, 20, 7);
  const auto c = sample_test_parameters(box, 20, 8);
  REQUIRE(a.size() == 20);
  CHECK(a == b);
  CHECK(a != c);
  for (const auto &mu : a)
    CHECK(box.contains(mu));

  ParameterBox point;
  point.lower = point.upper = {5e-4, 300.0};
  for (const auto &mu : sample_test_parameters(point, 5, 1))
    CHECK(mu == point.lower);

  const auto grid = training_parameters(box, 3, 3);
  REQUIRE(grid.size() == 9);
  CHECK(grid.front() == box.lower);
  CHECK(grid.back() == box.upper);
  CHECK(grid[1].charge_rate == doctest::Approx(5.5e-4));
  CHECK(grid[1].temperature == 250.0);
  CHECK(grid[3].temperature == 300.0);
  CHECK(training_parameters(point, 1, 1).size() == 1);
}

TEST_CASE("VTK export round trip")
{
  const VoxelGeometry g = morcell::testing::line_geometry({Label::NegCollector, Label::Electrolyte}, 2e-3);
  Trajectory t;
  t.states = VectorArray(DofLayout(2, g.cell_volume()).product_space(), Eigen::MatrixXd(4, 2));
  t.states.data() << 0.0, 0.5, 1.25, -3.0, 0.0, 0.25, 1.5e-3, 2.0;
  const fs::path dir = morcell::testing::scratch_dir("vtk");
  const auto files = export_vtk(t, g, dir / "run");
  REQUIRE(files.size() == 2);
  CHECK(files[1].filename() == "run_0001.vtk");
  const VtkCellData d = read_vtk(files[1]);
  CHECK(d.dims.nx == 2);
  CHECK(d.dims.ny == 1);
  CHECK(d.spacing == doctest::Approx(2e-3));
  CHECK(d.concentration[1] == -3.0);
  CHECK(d.potential[0] == 0.25);
  CHECK(d.potential[1] == 2.0);
  CHECK(read_vtk(files[0]).potential[1] == 1.5e-3);
  CHECK(d.label == std::vector<int>{static_cast<int>(Label::NegCollector), static_cast<int>(Label::Electrolyte)});
  CHECK_THROWS_AS(read_vtk(dir / "missing.vtk"), IoError);
}

TEST_CASE("configuration parsing")
{
  const ExperimentConfig defaults;
  const ExperimentConfig parsed = parse_config("{}");
  CHECK(parsed.hash() == defaults.hash());
  CHECK(parse_config(default_config_text()).hash() == defaults.hash());

  ExperimentConfig c = parse_config(R"({"geometry": {"dims": [20, 10, 10]}, "workers": 3, "output": "x"})");
  CHECK(c.dims.nx == 20);
  CHECK(c.workers == 3);
  CHECK(parse_config(config_to_text(c)).hash() == c.hash());
  // workers and output do not change results
  ExperimentConfig d = c;
  d.workers = 1;
  d.output = "y";
  CHECK(d.hash() == c.hash());
  d.steps = 3;
  CHECK(d.hash() != c.hash());

  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"time": {"steps": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"time": {"dt": -1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"geometry": {"dims": [20, 10, 10], "layout": [1, 1, 1, 1, 1]}})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("scaled slab layout")
{
  const LayerLayout a = scaled_layout(20, 0.614, 0.742);
  CHECK(std::array{a.neg_collector, a.neg_electrode, a.separator, a.pos_electrode, a.pos_collector} ==
        std::array<Index, 5>{3, 5, 4, 5, 3});
  const LayerLayout b = scaled_layout(8, 0.614, 0.742);
  CHECK(std::array{b.neg_collector, b.neg_electrode, b.separator, b.pos_electrode, b.pos_collector} ==
        std::array<Index, 5>{1, 2, 2, 2, 1});
  const LayerLayout r = scaled_layout(40, 0.614, 0.742);
  CHECK(std::array{r.neg_collector, r.neg_electrode, r.separator, r.pos_electrode, r.pos_collector} ==
        std::array<Index, 5>{5, 10, 10, 10, 5});
  CHECK(r.fill_pos == 0.614);
  CHECK_THROWS_AS(scaled_layout(4, 0.614, 0.742), ConfigError);
}

TEST_CASE("storage round trips")
{
  const fs::path dir = morcell::testing::scratch_dir("storage");
  ArrayContainer c;
  c.arrays["a"] = Eigen::MatrixXd::Random(3, 2);
  c.arrays["scalar"] = Eigen::MatrixXd::Constant(1, 1, 2.5);
  c.arrays["empty"] = Eigen::MatrixXd(0, 4);
  write_container(c, dir / "c.bin");
  const ArrayContainer r = read_container(dir / "c.bin");
  CHECK(r.arrays.size() == 3);
  CHECK(r.get("a") == c.arrays["a"]);
  CHECK(r.scalar("scalar") == 2.5);
  CHECK(r.get("empty").cols() == 4);
  CHECK_THROWS_AS(r.get("b"), IoError);

  std::ofstream(dir / "bad.bin") << "NOTMORCELL";
  CHECK_THROWS_AS(read_container(dir / "bad.bin"), IoError);
  CHECK_THROWS_AS(read_container(dir / "none.bin"), IoError);

  const Manifest m{{"b", "2"}, {"a", "x y"}};
  write_manifest(m, dir / "manifest.txt");
  CHECK(read_manifest(dir / "manifest.txt") == m);
  CHECK(slurp(dir / "manifest.txt") == "a = x y\nb = 2\n");

  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");

  ArrayContainer t;
  Trajectory traj = two_cell_trajectory({{1, 2, 3, 4}, {5, 6, 7, 8}});
  traj.dt = 30.0;
  traj.mu = {2e-4, 260.0};
  store_trajectory(t, traj, "x_");
  const Trajectory back = load_trajectory(t, traj.states.space(), "x_");
  CHECK(back.states.data() == traj.states.data());
  CHECK(back.mu == traj.mu);
  CHECK(back.dt == 30.0);
}

TEST_CASE("pipeline on a tiny cell")
{
  const fs::path dir = morcell::testing::scratch_dir("pipeline");
  const ExperimentConfig c1 = tiny_config(dir / "a");
  const ErrorReport r = run_pipeline(c1);
  REQUIRE(r.galerkin.size() == 2);
  REQUIRE(r.interpolated.size() == 2);
  // the empty basis reconstructs zero: relative error one
  CHECK(r.galerkin[0].concentration.max == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.galerkin[0].potential.max == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.galerkin[1].concentration.max < 1.0);
  CHECK(r.galerkin[1].failures == 0);
  CHECK(r.interpolated[0].distance_to_galerkin_c == 0.0);
  CHECK(r.interpolated[1].ei_size == 16);
  CHECK(fs::exists(dir / "a" / "errors.csv"));
  CHECK(fs::exists(dir / "a" / "errors_ei.csv"));
  CHECK(fs::exists(dir / "a" / "offline.manifest"));
  CHECK(slurp(dir / "a" / "errors.csv").starts_with(csv_header()));

  // identical results on a second run into a fresh directory
  const ExperimentConfig c2 = tiny_config(dir / "b");
  run_pipeline(c2);
  CHECK(slurp(dir / "a" / "errors.csv") == slurp(dir / "b" / "errors.csv"));
  CHECK(slurp(dir / "a" / "errors_ei.csv") == slurp(dir / "b" / "errors_ei.csv"));

  // the stored offline data reproduce the reduced model
  const OfflineData d = load_offline(c1);
  CHECK(d.basis.c.size() == 2);
  const ReducedModel m = reduced_model(c1, d, 2, false);
  const Trajectory t = m.discretization.solve(r.test_parameters[0]);
  const Trajectory stored = load_trajectory(read_container(reduced_trajectory_path(c1, 2, false, 0)),
                                            t.states.space());
  CHECK((t.states.data() - stored.states.data()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("command line exit codes")
{
  const fs::path dir = morcell::testing::scratch_dir("cli");
  CHECK(run_cli("--dump-defaults") == 0);
  CHECK(run_cli("check") == 0);
  CHECK(run_cli("geometry --dims 8x2x2 -o " + (dir / "g.txt").string()) == 0);
  CHECK(fs::exists(dir / "g.txt"));
  CHECK(run_cli("geometry --dims 8x2") == 2);
  CHECK(run_cli("geometry --dims 8x2x2 --layout 1,1,1,1,1") == 2);
  CHECK(run_cli("geometry --dims 8x2x2 -o /nonexistent/dir/g.txt") == 4);

  std::ofstream(dir / "unknown.json") << R"({"bogus": 1})";
  CHECK(run_cli("study --config " + (dir / "unknown.json").string()) == 2);
  std::ofstream(dir / "broken.json") << "{";
  CHECK(run_cli("solve --config " + (dir / "broken.json").string()) == 2);
  // offline data that was never written
  std::ofstream(dir / "empty.json") << R"({"geometry": {"dims": [8, 2, 2]}, "output": ")" << (dir / "none").string()
                                   << "\"}";
  CHECK(run_cli("online --config " + (dir / "empty.json").string()) == 4);
  CHECK(run_cli("no-such-command") != 0);
}
