#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "morcell/conformance.hpp"
#include "morcell/experiment.hpp"
#include "morcell/storage.hpp"

using namespace morcell;
namespace fs = std::filesystem;

namespace
{

enum Exit
{
  ok = 0,
  failure = 1,
  config_error = 2,
  solver_error = 3,
  io_error = 4
};

int classify(const std::exception_ptr &e)
{
  try
  {
    std::rethrow_exception(e);
  }
  catch (const StageError &s)
  {
    return s.cause() ? classify(s.cause()) : failure;
  }
  catch (const ConfigError &)
  {
    return config_error;
  }
  catch (const GeometryError &)
  {
    return config_error;
  }
  catch (const SolverError &)
  {
    return solver_error;
  }
  catch (const EvaluationError &)
  {
    return solver_error;
  }
  catch (const DomainError &)
  {
    return solver_error;
  }
  catch (const IoError &)
  {
    return io_error;
  }
  catch (const ParseError &)
  {
    return io_error;
  }
  catch (const fs::filesystem_error &)
  {
    return io_error;
  }
  catch (...)
  {
    return failure;
  }
}

GridDims parse_dims(const std::string &text)
{
  GridDims d;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> d.nx >> x1 >> d.ny >> x2 >> d.nz) || x1 != 'x' || x2 != 'x' || !in.eof())
    throw ConfigError("--dims expects NXxNYxNZ, got '" + text + "'");
  return d;
}

std::array<Index, 5> parse_layout(const std::string &text)
{
  std::array<Index, 5> w{};
  std::istringstream in(text);
  char comma = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!(in >> w[i]) || (i + 1 < w.size() && (!(in >> comma) || comma != ',')))
      throw ConfigError("--layout expects five comma separated widths, got '" + text + "'");
  if (!in.eof() && (in >> std::ws, !in.eof()))
    throw ConfigError("--layout expects five comma separated widths, got '" + text + "'");
  return w;
}

struct Options
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool verbose = false;
  std::string output;
};

ExperimentConfig resolve(const Options &o)
{
  ExperimentConfig c = o.config.empty() ? parse_config(default_config_text()) : load_config(o.config);
  if (o.seed)
    c.geometry_seed = *o.seed;
  if (o.workers)
    c.workers = *o.workers;
  if (!o.output.empty())
    c.output = o.output;
  c.validate();
  return c;
}

void print_report(const ErrorReport &r)
{
  std::printf("%-12s %-5s %-5s %-5s %-14s %-14s %-9s\n", "model", "size", "ei", "fail", "max_err_c", "max_err_phi",
              "online_s");
  for (const auto *list : {&r.galerkin, &r.interpolated})
    for (const auto &s : *list)
      std::printf("%-12s %-5ld %-5ld %-5ld %-14.4e %-14.4e %-9.3f\n", list == &r.galerkin ? "galerkin" : "interpolated",
                  static_cast<long>(s.basis_size), static_cast<long>(s.ei_size), static_cast<long>(s.failures),
                  s.concentration.max, s.potential.max, s.online_seconds);
  if (!r.interpolated.empty())
  {
    std::printf("\n%-5s %-14s %-14s %-14s\n", "size", "ei_residual", "dist_galerkin_c", "dist_galerkin_phi");
    for (const auto &s : r.interpolated)
      std::printf("%-5ld %-14.4e %-14.4e %-14.4e\n", static_cast<long>(s.basis_size), s.ei_residual,
                  s.distance_to_galerkin_c, s.distance_to_galerkin_phi);
  }
  std::printf("mean detailed solve: %.3f s\n", r.detailed_seconds);
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Reduced basis models of a microstructure battery cell"};
  app.require_subcommand(0, 1);
  Options o;
  bool dump_defaults = false;
  app.add_flag("--dump-defaults", dump_defaults, "Print the default configuration and exit");
  auto add_common = [&](CLI::App *sub, bool with_output) {
    sub->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Geometry seed");
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", o.verbose, "Log solver progress to stderr");
    if (with_output)
      sub->add_option("-o,--output", o.output, "Output directory");
  };

  auto *geometry = app.add_subcommand("geometry", "Generate a voxel geometry");
  std::string dims = "40x20x20", layout;
  double fill_pos = 0.614, fill_neg = 0.742;
  std::string geometry_file = "geometry.txt";
  geometry->add_option("--dims", dims, "Grid size NXxNYxNZ")->capture_default_str();
  geometry->add_option("--layout", layout, "Slab widths NC,NE,S,PE,PC (default: scaled to NX)");
  geometry->add_option("--fill-pos", fill_pos, "Particle fraction of the positive electrode")->capture_default_str();
  geometry->add_option("--fill-neg", fill_neg, "Particle fraction of the negative electrode")->capture_default_str();
  geometry->add_option("--seed", o.seed, "Geometry seed (default 42)");
  geometry->add_option("-o,--output", geometry_file, "Geometry file")->capture_default_str();

  auto *solve = app.add_subcommand("solve", "Detailed solve for one parameter");
  auto *offline = app.add_subcommand("offline", "Training snapshots, POD-Greedy and interpolation");
  auto *online = app.add_subcommand("online", "Reduced solve for one parameter from stored offline data");
  auto *study = app.add_subcommand("study", "Full pipeline with the error study");
  auto *check = app.add_subcommand("check", "Vector array axioms and substitutability checks");
  Parameter mu{5e-4, 298.0};
  bool vtk = false, galerkin = false;
  Index basis_size = -1;
  for (auto *sub : {solve, offline, online, study})
    add_common(sub, true);
  check->add_option("--seed", o.seed, "Seed of the check problem");
  check->add_flag("--verbose", o.verbose, "List every check");
  for (auto *sub : {solve, online})
  {
    sub->add_option("--current", mu.charge_rate, "Charge rate I in A/cm^2")->capture_default_str();
    sub->add_option("--temperature", mu.temperature, "Temperature T in K")->capture_default_str();
    sub->add_flag("--vtk", vtk, "Write VTK files of the trajectory");
  }
  online->add_option("--basis-size", basis_size, "Reduced basis size (default: largest studied)");
  online->add_flag("--galerkin", galerkin, "Use the Galerkin model instead of the interpolated one");

  CLI11_PARSE(app, argc, argv);
  if (dump_defaults)
  {
    std::cout << default_config_text();
    return ok;
  }
  std::ostream *log = o.verbose ? &std::cerr : nullptr;

  try
  {
    if (geometry->parsed())
    {
      const GridDims d = parse_dims(dims);
      LayerLayout l = layout.empty() ? scaled_layout(d.nx, fill_pos, fill_neg) : LayerLayout{};
      if (!layout.empty())
      {
        const auto w = parse_layout(layout);
        l = {w[0], w[1], w[2], w[3], w[4], fill_pos, fill_neg};
      }
      if (l.total_width() != d.nx)
        throw ConfigError("layout widths add up to " + std::to_string(l.total_width()) + ", nx is " +
                          std::to_string(d.nx));
      const auto g = generate_geometry(d, l, o.seed.value_or(42));
      (void)classify_faces(g);
      save_geometry(g, geometry_file);
      std::printf("%s: %ldx%ldx%ld, spacing %.6e cm, fractions PE %.4f NE %.4f\n", geometry_file.c_str(),
                  static_cast<long>(d.nx), static_cast<long>(d.ny), static_cast<long>(d.nz), g.spacing(),
                  volume_fraction(g, Label::PosElectrode), volume_fraction(g, Label::NegElectrode));
    }
    else if (solve->parsed())
    {
      const ExperimentConfig c = resolve(o);
      const OfflineData model = build_model(c);
      double seconds = 0.0;
      const Trajectory t = detailed_solution(c, *model.detailed, mu, log, &seconds);
      ArrayContainer out;
      store_trajectory(out, t);
      fs::create_directories(c.output);
      write_container(out, c.output / "detailed.bin");
      if (vtk)
        export_vtk(t, model.op->geometry(), c.output / "vtk" / "detailed");
      std::printf("detailed solve: %ld dofs, %ld steps, %.3f s -> %s\n", static_cast<long>(t.states.dim()),
                  static_cast<long>(t.steps()), seconds, (c.output / "detailed.bin").c_str());
    }
    else if (offline->parsed())
    {
      const ExperimentConfig c = resolve(o);
      const OfflineData d = run_offline(c, log);
      std::printf("basis sizes c %ld phi %ld, interpolation points %ld -> %s\n", static_cast<long>(d.basis.c.size()),
                  static_cast<long>(d.basis.phi.size()), static_cast<long>(d.ei ? d.ei->size() : 0),
                  c.output.c_str());
    }
    else if (online->parsed())
    {
      const ExperimentConfig c = resolve(o);
      const OfflineData d = load_offline(c);
      const Index size = basis_size >= 0 ? basis_size : d.basis.size();
      const ReducedModel model = reduced_model(c, d, size, !galerkin && c.ei);
      SolveStats stats;
      const Trajectory reduced = model.discretization.solve(mu, log, &stats);
      ArrayContainer out;
      store_trajectory(out, reconstruct(reduced, model.block_basis));
      write_container(out, c.output / "online.bin");
      if (vtk)
        export_vtk(reconstruct(reduced, model.block_basis), d.op->geometry(), c.output / "vtk" / "online");
      std::printf("reduced solve: dimension %ld, %ld Newton iterations, %.4f s -> %s\n",
                  static_cast<long>(reduced.states.dim()), static_cast<long>(stats.newton_iterations),
                  stats.total_seconds, (c.output / "online.bin").c_str());
    }
    else if (study->parsed())
    {
      const ExperimentConfig c = resolve(o);
      print_report(run_pipeline(c, log));
    }
    else if (check->parsed())
    {
      const ConformanceReport r = run_conformance_suite(static_cast<unsigned>(o.seed.value_or(1)));
      std::size_t failed = 0;
      for (const auto &c : r.checks)
      {
        failed += !c.passed;
        if (o.verbose || !c.passed)
          std::printf("%s  %s%s%s\n", c.passed ? "pass" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                      c.detail.c_str());
      }
      std::printf("%zu checks, %zu failed\n", r.checks.size(), failed);
      return r.passed() ? ok : failure;
    }
    else
    {
      std::cout << app.help();
    }
  }
  catch (const std::exception &e)
  {
    std::fprintf(stderr, "morcell: %s\n", e.what());
    return classify(std::current_exception());
  }
  return ok;
}
