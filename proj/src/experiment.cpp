#include "morcell/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "morcell/metrics.hpp"
#include "morcell/parallel.hpp"
#include "morcell/random.hpp"
#include "morcell/storage.hpp"

namespace morcell
{

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace
{

constexpr std::array<Index, 5> reference_widths{5, 10, 10, 10, 5};
constexpr Index reference_nx = 40;

const char *ocp_name(OcpCurve c)
{
  switch (c)
  {
  case OcpCurve::Negative: return "negative";
  case OcpCurve::Positive: return "positive";
  case OcpCurve::None: break;
  }
  return "none";
}

OcpCurve ocp_from_name(const std::string &s)
{
  if (s == "none")
    return OcpCurve::None;
  if (s == "negative")
    return OcpCurve::Negative;
  if (s == "positive")
    return OcpCurve::Positive;
  throw ConfigError("unknown ocp curve '" + s + "' (none, negative, positive)");
}

json material_json(const Material &m)
{
  return {{"alpha", m.alpha},   {"beta", m.beta},   {"gamma", m.gamma},
          {"gamma_per_kelvin", m.gamma_per_kelvin}, {"delta", m.delta}, {"c0", m.c0},
          {"c_max", m.c_max},   {"reaction_rate", m.reaction_rate}, {"ocp", ocp_name(m.ocp)}};
}

json config_json(const ExperimentConfig &c)
{
  json materials = json::object();
  for (Label l : all_labels)
    materials[std::string(label_token(l))] = material_json(c.materials[l]);
  json layout = nullptr;
  if (c.layout)
    layout = *c.layout;
  return {
    {"geometry",
     {{"dims", {c.dims.nx, c.dims.ny, c.dims.nz}},
      {"layout", layout},
      {"fill_pos", c.fill_pos},
      {"fill_neg", c.fill_neg},
      {"seed", c.geometry_seed},
      {"domain_length", c.domain_length}}},
    {"materials", materials},
    {"time", {{"steps", c.steps}, {"dt", c.dt}}},
    {"parameters",
     {{"charge_rate", {c.box.lower.charge_rate, c.box.upper.charge_rate}},
      {"temperature", {c.box.lower.temperature, c.box.upper.temperature}}}},
    {"training", {{"grid", c.training_grid}}},
    {"study",
     {{"basis_sizes", c.basis_sizes},
      {"test_count", c.test_count},
      {"test_seed", c.test_seed},
      {"ei", c.ei},
      {"ei_factor", c.ei_factor},
      {"ei_jacobian", c.ei_jacobian}}},
    {"newton",
     {{"abs_tol", c.newton.abs_tol},
      {"rel_tol", c.newton.rel_tol},
      {"max_iter", c.newton.max_iter},
      {"damping_factor", c.newton.damping_factor},
      {"min_step", c.newton.min_step},
      {"armijo", c.newton.armijo},
      {"equilibrate", c.newton.equilibrate},
      {"stagnation_factor", c.newton.stagnation_factor}}},
    {"workers", c.workers},
    {"record_timings", c.record_timings},
    {"vtk", c.vtk},
    {"output", c.output.string()},
  };
}

void check_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &where)
{
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  for (const auto &item : j.items())
  {
    bool known = false;
    for (const char *a : allowed)
      known = known || item.key() == a;
    if (!known)
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T> void read(const json &j, const char *key, T &out, const std::string &where)
{
  if (!j.contains(key))
    return;
  try
  {
    out = j.at(key).get<T>();
  }
  catch (const json::exception &)
  {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void read_range(const json &j, const char *key, double &lo, double &hi, const std::string &where)
{
  std::array<double, 2> r{lo, hi};
  read(j, key, r, where);
  lo = r[0];
  hi = r[1];
}

/// Entries that determine a detailed trajectory.
std::string model_key(const ExperimentConfig &c)
{
  const json full = config_json(c);
  nlohmann::json key = {{"geometry", nlohmann::json::parse(full["geometry"].dump())},
                        {"materials", nlohmann::json::parse(full["materials"].dump())},
                        {"time", nlohmann::json::parse(full["time"].dump())},
                        {"newton", nlohmann::json::parse(full["newton"].dump())}};
  return key.dump();
}

std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Runs one pipeline stage, attaching the stage name to any failure.
template <typename F> auto stage(const char *name, const ExperimentConfig &config, std::ostream *log, F &&body)
{
  if (log)
    *log << "stage " << name << "\n";
  try
  {
    return body();
  }
  catch (const StageError &)
  {
    throw;
  }
  catch (const std::exception &e)
  {
    throw StageError(name, std::string(e.what()) + " (artifacts kept in " + config.output.string() + ")",
                     std::current_exception());
  }
}

/// Detailed solutions for a list of parameters; the logs are written in order.
std::vector<Trajectory> detailed_solutions(const ExperimentConfig &config, const InstationaryDiscretization &d,
                                           const std::vector<Parameter> &mus, std::ostream *log,
                                           std::vector<double> *seconds)
{
  std::vector<Trajectory> out(mus.size());
  std::vector<std::ostringstream> logs(mus.size());
  std::vector<double> secs(mus.size(), 0.0);
  parallel_for(mus.size(), config.workers, [&](std::size_t i) {
    out[i] = detailed_solution(config, d, mus[i], log ? &logs[i] : nullptr, &secs[i]);
  });
  if (log)
    for (const auto &l : logs)
      *log << l.str();
  if (seconds)
    *seconds = std::move(secs);
  return out;
}

void finish(FieldErrors &e)
{
  e.max = 0.0;
  e.mean = 0.0;
  for (double v : e.per_parameter)
  {
    e.max = std::max(e.max, v);
    e.mean += v;
  }
  if (!e.per_parameter.empty())
    e.mean /= static_cast<double>(e.per_parameter.size());
}

} // namespace

// ---------------------------------------------------------------------------
// configuration

LayerLayout scaled_layout(Index nx, double fill_pos, double fill_neg)
{
  auto scale = [nx](Index w) { return (2 * w * nx + reference_nx) / (2 * reference_nx); };
  LayerLayout l;
  l.neg_collector = scale(reference_widths[0]);
  l.neg_electrode = scale(reference_widths[1]);
  l.pos_electrode = scale(reference_widths[3]);
  l.pos_collector = scale(reference_widths[4]);
  l.separator = nx - l.neg_collector - l.neg_electrode - l.pos_electrode - l.pos_collector;
  l.fill_pos = fill_pos;
  l.fill_neg = fill_neg;
  if (l.separator < 1 || l.neg_collector < 1 || l.neg_electrode < 1)
    throw ConfigError("grid too coarse for the layer layout (nx = " + std::to_string(nx) + ")");
  return l;
}

LayerLayout ExperimentConfig::layer_layout() const
{
  if (!layout)
    return scaled_layout(dims.nx, fill_pos, fill_neg);
  const auto &w = *layout;
  return {w[0], w[1], w[2], w[3], w[4], fill_pos, fill_neg};
}

void ExperimentConfig::validate() const
{
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
    throw ConfigError("geometry.dims must be positive");
  if (layout)
  {
    for (Index w : *layout)
      if (w < 0)
        throw ConfigError("geometry.layout widths must be non-negative");
    if (layer_layout().total_width() != dims.nx)
      throw ConfigError("geometry.layout widths must add up to nx = " + std::to_string(dims.nx));
  }
  else
    (void)layer_layout();
  if (!(fill_pos >= 0.0 && fill_pos <= 1.0) || !(fill_neg >= 0.0 && fill_neg <= 1.0))
    throw ConfigError("geometry fills must lie in [0, 1]");
  if (!(domain_length > 0.0))
    throw ConfigError("geometry.domain_length must be positive");
  materials.validate();
  if (steps < 0 || !(dt > 0.0))
    throw ConfigError("time: need steps >= 0 and dt > 0");
  if (!(box.lower.charge_rate <= box.upper.charge_rate) || !(box.lower.temperature <= box.upper.temperature) ||
      !(box.lower.temperature > 0.0))
    throw ConfigError("parameters: each range must be [lower, upper] with positive temperatures");
  if (training_grid[0] < 1 || training_grid[1] < 1)
    throw ConfigError("training.grid needs at least one point per axis");
  if (basis_sizes.empty())
    throw ConfigError("study.basis_sizes must not be empty");
  for (Index s : basis_sizes)
    if (s < 0)
      throw ConfigError("study.basis_sizes must be non-negative");
  if (test_count < 1)
    throw ConfigError("study.test_count must be at least 1");
  if (!(ei_factor > 0.0))
    throw ConfigError("study.ei_factor must be positive");
  if (workers < 1)
    throw ConfigError("workers must be at least 1");
  newton.validate();
}

std::string ExperimentConfig::hash() const
{
  json full = config_json(*this);
  full.erase("workers");
  full.erase("record_timings");
  full.erase("vtk");
  full.erase("output");
  return hex64(fnv1a(nlohmann::json::parse(full.dump()).dump()));
}

std::string config_to_text(const ExperimentConfig &config)
{
  return config_json(config).dump(2) + "\n";
}

std::string default_config_text()
{
  return config_to_text(ExperimentConfig{});
}

ExperimentConfig parse_config(const std::string &text)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  check_keys(j,
             {"geometry", "materials", "time", "parameters", "training", "study", "newton", "workers",
              "record_timings", "vtk", "output"},
             "config");

  if (j.contains("geometry"))
  {
    const json &g = j["geometry"];
    check_keys(g, {"dims", "layout", "fill_pos", "fill_neg", "seed", "domain_length"}, "geometry");
    std::array<Index, 3> dims{c.dims.nx, c.dims.ny, c.dims.nz};
    read(g, "dims", dims, "geometry");
    c.dims = {dims[0], dims[1], dims[2]};
    if (g.contains("layout") && !g["layout"].is_null())
    {
      std::array<Index, 5> w{};
      read(g, "layout", w, "geometry");
      c.layout = w;
    }
    read(g, "fill_pos", c.fill_pos, "geometry");
    read(g, "fill_neg", c.fill_neg, "geometry");
    read(g, "seed", c.geometry_seed, "geometry");
    read(g, "domain_length", c.domain_length, "geometry");
  }
  if (j.contains("materials"))
  {
    const json &m = j["materials"];
    check_keys(m, {"E", "PE", "NE", "PC", "NC"}, "materials");
    for (const auto &item : m.items())
    {
      const std::string where = "materials." + item.key();
      Material &mat = c.materials[label_from_token(item.key())];
      const json &v = item.value();
      check_keys(v,
                 {"alpha", "beta", "gamma", "gamma_per_kelvin", "delta", "c0", "c_max", "reaction_rate", "ocp"},
                 where);
      read(v, "alpha", mat.alpha, where);
      read(v, "beta", mat.beta, where);
      read(v, "gamma", mat.gamma, where);
      read(v, "gamma_per_kelvin", mat.gamma_per_kelvin, where);
      read(v, "delta", mat.delta, where);
      read(v, "c0", mat.c0, where);
      read(v, "c_max", mat.c_max, where);
      read(v, "reaction_rate", mat.reaction_rate, where);
      if (v.contains("ocp"))
      {
        std::string name;
        read(v, "ocp", name, where);
        mat.ocp = ocp_from_name(name);
      }
    }
  }
  if (j.contains("time"))
  {
    check_keys(j["time"], {"steps", "dt"}, "time");
    read(j["time"], "steps", c.steps, "time");
    read(j["time"], "dt", c.dt, "time");
  }
  if (j.contains("parameters"))
  {
    const json &p = j["parameters"];
    check_keys(p, {"charge_rate", "temperature"}, "parameters");
    read_range(p, "charge_rate", c.box.lower.charge_rate, c.box.upper.charge_rate, "parameters");
    read_range(p, "temperature", c.box.lower.temperature, c.box.upper.temperature, "parameters");
  }
  if (j.contains("training"))
  {
    check_keys(j["training"], {"grid"}, "training");
    read(j["training"], "grid", c.training_grid, "training");
  }
  if (j.contains("study"))
  {
    const json &s = j["study"];
    check_keys(s, {"basis_sizes", "test_count", "test_seed", "ei", "ei_factor", "ei_jacobian"}, "study");
    read(s, "basis_sizes", c.basis_sizes, "study");
    read(s, "test_count", c.test_count, "study");
    read(s, "test_seed", c.test_seed, "study");
    read(s, "ei", c.ei, "study");
    read(s, "ei_factor", c.ei_factor, "study");
    read(s, "ei_jacobian", c.ei_jacobian, "study");
  }
  if (j.contains("newton"))
  {
    const json &n = j["newton"];
    check_keys(n, {"abs_tol", "rel_tol", "max_iter", "damping_factor", "min_step", "armijo", "equilibrate",
                   "stagnation_factor"},
               "newton");
    read(n, "abs_tol", c.newton.abs_tol, "newton");
    read(n, "rel_tol", c.newton.rel_tol, "newton");
    read(n, "max_iter", c.newton.max_iter, "newton");
    read(n, "damping_factor", c.newton.damping_factor, "newton");
    read(n, "min_step", c.newton.min_step, "newton");
    read(n, "armijo", c.newton.armijo, "newton");
    read(n, "equilibrate", c.newton.equilibrate, "newton");
    read(n, "stagnation_factor", c.newton.stagnation_factor, "newton");
  }
  read(j, "workers", c.workers, "config");
  read(j, "record_timings", c.record_timings, "config");
  read(j, "vtk", c.vtk, "config");
  std::string output = c.output.string();
  read(j, "output", output, "config");
  c.output = output;
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

// ---------------------------------------------------------------------------
// parameters

std::vector<Parameter> training_parameters(const ParameterBox &box, Index n_rate, Index n_temperature)
{
  if (n_rate < 1 || n_temperature < 1)
    throw ConfigError("training grid needs at least one point per axis");
  auto point = [](double lo, double hi, Index i, Index n) {
    if (n == 1)
      return 0.5 * (lo + hi);
    if (i == n - 1)
      return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::vector<Parameter> out;
  for (Index t = 0; t < n_temperature; ++t)
    for (Index i = 0; i < n_rate; ++i)
      out.push_back({point(box.lower.charge_rate, box.upper.charge_rate, i, n_rate),
                     point(box.lower.temperature, box.upper.temperature, t, n_temperature)});
  return out;
}

std::vector<Parameter> sample_test_parameters(const ParameterBox &box, Index count, std::uint64_t seed)
{
  if (count < 1)
    throw ConfigError("sample_test_parameters: count must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<Parameter> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index n = 0; n < count; ++n)
  {
    const double u = uniform01(rng);
    const double v = uniform01(rng);
    out.push_back({box.lower.charge_rate + (box.upper.charge_rate - box.lower.charge_rate) * u,
                   box.lower.temperature + (box.upper.temperature - box.lower.temperature) * v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// VTK

std::vector<fs::path> export_vtk(const Trajectory &trajectory, const VoxelGeometry &geometry, const fs::path &prefix)
{
  const Index n = geometry.cells();
  if (trajectory.states.dim() != 2 * n)
    throw ConfigError("export_vtk: trajectory does not match the geometry");
  if (prefix.has_parent_path())
    fs::create_directories(prefix.parent_path());
  const GridDims &d = geometry.dims();
  std::vector<fs::path> paths;
  char name[32];
  for (Index t = 0; t < trajectory.states.size(); ++t)
  {
    std::snprintf(name, sizeof name, "_%04ld.vtk", static_cast<long>(t));
    fs::path path = prefix;
    path += name;
    std::ofstream out(path);
    if (!out)
      throw IoError("cannot open for writing: " + path.string());
    const auto u = trajectory.states.data().col(t);
    out << "# vtk DataFile Version 3.0\n"
        << "morcell step " << t << "\n"
        << "ASCII\nDATASET STRUCTURED_POINTS\n"
        << "DIMENSIONS " << d.nx + 1 << ' ' << d.ny + 1 << ' ' << d.nz + 1 << "\n"
        << "ORIGIN 0 0 0\n"
        << "SPACING " << format_double(geometry.spacing()) << ' ' << format_double(geometry.spacing()) << ' '
        << format_double(geometry.spacing()) << "\n"
        << "CELL_DATA " << n << "\n";
    // VTK runs x fastest
    auto each_cell = [&](auto &&emit) {
      for (Index k = 0; k < d.nz; ++k)
        for (Index j = 0; j < d.ny; ++j)
          for (Index i = 0; i < d.nx; ++i)
            emit(geometry.linear_index({i, j, k}));
    };
    out << "SCALARS concentration double 1\nLOOKUP_TABLE default\n";
    each_cell([&](Index c) { out << format_double(u[c]) << '\n'; });
    out << "SCALARS potential double 1\nLOOKUP_TABLE default\n";
    each_cell([&](Index c) { out << format_double(u[n + c]) << '\n'; });
    out << "SCALARS label int 1\nLOOKUP_TABLE default\n";
    each_cell([&](Index c) { out << static_cast<int>(geometry.label(c)) << '\n'; });
    if (!out)
      throw IoError("write failed: " + path.string());
    paths.push_back(std::move(path));
  }
  return paths;
}

VtkCellData read_vtk(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open: " + path.string());
  VtkCellData data;
  std::string word;
  Index cells = -1;
  auto fail = [&](const std::string &what) { return IoError(path.string() + ": " + what); };
  auto cell_of = [&](Index v) {
    const Index i = v % data.dims.nx;
    const Index j = (v / data.dims.nx) % data.dims.ny;
    const Index k = v / (data.dims.nx * data.dims.ny);
    return (i * data.dims.ny + j) * data.dims.nz + k;
  };
  while (in >> word)
  {
    if (word == "DIMENSIONS")
    {
      in >> data.dims.nx >> data.dims.ny >> data.dims.nz;
      --data.dims.nx;
      --data.dims.ny;
      --data.dims.nz;
    }
    else if (word == "SPACING")
    {
      double sy, sz;
      in >> data.spacing >> sy >> sz;
    }
    else if (word == "CELL_DATA")
    {
      in >> cells;
      if (cells != data.dims.cells())
        throw fail("cell count does not match the dimensions");
    }
    else if (word == "SCALARS")
    {
      std::string name, type, lut, lut_name;
      int components = 0;
      in >> name >> type >> components >> lut >> lut_name;
      if (cells < 0)
        throw fail("SCALARS before CELL_DATA");
      if (name == "label")
      {
        data.label.assign(static_cast<std::size_t>(cells), 0);
        for (Index v = 0; v < cells; ++v)
          in >> data.label[static_cast<std::size_t>(cell_of(v))];
      }
      else
      {
        Eigen::VectorXd values(cells);
        for (Index v = 0; v < cells; ++v)
          in >> values[cell_of(v)];
        if (name == "concentration")
          data.concentration = std::move(values);
        else if (name == "potential")
          data.potential = std::move(values);
      }
      if (!in)
        throw fail("malformed " + name + " data");
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// pipeline

OfflineData build_model(const ExperimentConfig &config)
{
  config.validate();
  OfflineData d;
  auto geometry = generate_geometry(config.dims, config.layer_layout(), config.geometry_seed, config.domain_length);
  d.op = std::make_shared<const BatterySpaceOperator>(std::move(geometry), config.materials);
  d.detailed = discretize(d.op, config.steps, config.dt, config.newton);
  d.training = training_parameters(config.box, config.training_grid[0], config.training_grid[1]);
  return d;
}

Trajectory detailed_solution(const ExperimentConfig &config, const InstationaryDiscretization &detailed,
                             const Parameter &mu, std::ostream *log, double *seconds)
{
  const std::string key = model_key(config) + "|" + format_double(mu.charge_rate) + "|" + format_double(mu.temperature);
  const fs::path path = config.output / "cache" / ("detailed_" + hex64(fnv1a(key)) + ".bin");
  if (fs::exists(path))
  {
    const ArrayContainer c = read_container(path);
    Trajectory t = load_trajectory(c, detailed.solution_space());
    if (t.mu == mu && t.states.size() == detailed.steps() + 1)
    {
      if (seconds)
        *seconds = c.scalar("seconds");
      if (log)
        *log << "detailed I=" << format_double(mu.charge_rate) << " T=" << format_double(mu.temperature)
             << " cached " << path.string() << "\n";
      return t;
    }
  }
  if (log)
    *log << "detailed I=" << format_double(mu.charge_rate) << " T=" << format_double(mu.temperature) << "\n";
  SolveStats stats;
  Trajectory t = detailed.solve(mu, log, &stats);
  fs::create_directories(path.parent_path());
  ArrayContainer c;
  store_trajectory(c, t);
  c.arrays["seconds"] = Eigen::MatrixXd::Constant(1, 1, stats.total_seconds);
  // write then rename so concurrent or interrupted runs never see a partial file
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::string>{}(key + std::to_string(stats.total_seconds)));
  write_container(c, tmp);
  fs::rename(tmp, path);
  if (seconds)
    *seconds = stats.total_seconds;
  return t;
}

Index ei_size_for(const ExperimentConfig &config, const ReducedBasis &basis)
{
  return static_cast<Index>(std::llround(config.ei_factor * static_cast<double>(basis.c.size() + basis.phi.size())));
}

OfflineData run_offline(const ExperimentConfig &config, std::ostream *log)
{
  OfflineData d = stage("geometry", config, log, [&] {
    OfflineData m = build_model(config);
    fs::create_directories(config.output);
    save_geometry(m.op->geometry(), config.output / "geometry.txt");
    return m;
  });
  const DofLayout &layout = d.op->layout();
  const Index target = *std::max_element(config.basis_sizes.begin(), config.basis_sizes.end());

  const std::vector<Trajectory> snapshots = stage(
    "training", config, log, [&] { return detailed_solutions(config, *d.detailed, d.training, log, nullptr); });

  stage("greedy", config, log, [&] {
    GreedySettings settings;
    settings.target_size = target;
    settings.workers = config.workers;
    PodGreedyResult res = pod_greedy(*d.detailed, layout, d.training, snapshots, settings, log);
    d.basis = std::move(res.basis);
    d.greedy = std::move(res.log);
    return 0;
  });

  if (config.ei)
    stage("interpolation", config, log, [&] {
      const VectorArray v = d.basis.block(layout);
      const auto target = interpolation_target(d.op);
      VectorArray evaluations = operator_snapshots(*target, snapshots, &v, config.workers);
      if (config.ei_jacobian)
        evaluations.append(jacobian_snapshots(*target, snapshots, v, config.workers));
      const Eigen::VectorXd scaling = block_scaling(evaluations, layout);
      if (config.ei_jacobian)
        normalize_columns(evaluations, scaling);
      d.ei = ei_greedy(evaluations, ei_size_for(config, d.basis), 0.0, &scaling, log);
      if (log)
        *log << "interpolation size=" << d.ei->size() << " relative_residual=" << d.ei->relative_residual << "\n";
      return 0;
    });

  stage("artifacts", config, log, [&] {
    ArrayContainer c;
    store_basis(c, d.basis);
    store_greedy_log(c, d.greedy);
    if (d.ei)
      store_ei(c, *d.ei);
    write_container(c, config.output / "offline.bin");
    Manifest m;
    m["format_version"] = std::to_string(ArrayContainer::version);
    m["config_hash"] = config.hash();
    m["dims"] = std::to_string(config.dims.nx) + "x" + std::to_string(config.dims.ny) + "x" +
                std::to_string(config.dims.nz);
    m["dofs"] = std::to_string(layout.size());
    m["geometry_seed"] = std::to_string(config.geometry_seed);
    m["test_seed"] = std::to_string(config.test_seed);
    m["training_parameters"] = std::to_string(d.training.size());
    m["basis_size_c"] = std::to_string(d.basis.c.size());
    m["basis_size_phi"] = std::to_string(d.basis.phi.size());
    m["greedy_iterations"] = std::to_string(d.greedy.records.size());
    m["ei_size"] = std::to_string(d.ei ? d.ei->size() : 0);
    m["ei_relative_residual"] = d.ei ? format_double(d.ei->relative_residual) : "none";
    write_manifest(m, config.output / "offline.manifest");
    std::ofstream(config.output / "config.json") << config_to_text(config);
    return 0;
  });
  return d;
}

OfflineData load_offline(const ExperimentConfig &config)
{
  OfflineData d = build_model(config);
  const Manifest m = read_manifest(config.output / "offline.manifest");
  const auto hash = m.find("config_hash");
  if (hash == m.end() || hash->second != config.hash())
    throw ConfigError("offline artifacts in " + config.output.string() + " were built with a different configuration");
  const ArrayContainer c = read_container(config.output / "offline.bin");
  d.basis = load_basis(c, d.op->layout().field_space());
  d.greedy = load_greedy_log(c);
  if (c.arrays.count("ei_collateral"))
    d.ei = load_ei(c, d.op->layout().product_space());
  return d;
}

ReducedModel reduced_model(const ExperimentConfig &config, const OfflineData &offline, Index basis_size,
                           bool interpolated)
{
  const ReducedBasis basis = offline.basis.truncated(basis_size);
  if (!interpolated)
    return reduce(*offline.detailed, offline.op->layout(), basis);
  if (!offline.ei)
    throw ConfigError("no interpolation data (study.ei is off)");
  EIData ei = offline.ei->truncated(std::min(ei_size_for(config, basis), offline.ei->size()));
  return reduce(*offline.detailed, offline.op->layout(), basis, &ei);
}

fs::path reduced_trajectory_path(const ExperimentConfig &config, Index basis_size, bool interpolated,
                                 std::size_t test_index)
{
  return config.output / "study" /
         ((interpolated ? "ei_r" : "galerkin_r") + std::to_string(basis_size) + "_t" + std::to_string(test_index) +
          ".bin");
}

std::string csv_header()
{
  return "basis_size,field,max_rel_error,mean_rel_error,online_seconds";
}

void write_csv(const std::vector<SizeReport> &sizes, bool record_timings, const fs::path &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open for writing: " + path.string());
  out << csv_header() << "\n";
  for (const auto &s : sizes)
    for (const auto &[name, e] : {std::pair{"concentration", &s.concentration}, std::pair{"potential", &s.potential}})
      out << s.basis_size << ',' << name << ',' << format_double(e->max) << ',' << format_double(e->mean) << ','
          << format_double(record_timings ? s.online_seconds : 0.0) << "\n";
  if (!out)
    throw IoError("write failed: " + path.string());
}

ErrorReport run_study(const ExperimentConfig &config, const OfflineData &offline, std::ostream *log)
{
  ErrorReport report;
  const DofLayout &layout = offline.op->layout();
  report.test_parameters = sample_test_parameters(config.box, config.test_count, config.test_seed);
  const auto &mus = report.test_parameters;
  const std::size_t n = mus.size();

  const std::vector<Trajectory> detailed = stage("test", config, log, [&] {
    std::vector<double> secs;
    auto t = detailed_solutions(config, *offline.detailed, mus, log, &secs);
    for (double s : secs)
      report.detailed_seconds += s / static_cast<double>(secs.size());
    return t;
  });

  stage("study", config, log, [&] {
    fs::create_directories(config.output / "study");
    for (Index size : config.basis_sizes)
    {
      std::vector<Trajectory> galerkin(n);
      for (bool interpolated : {false, true})
      {
        if (interpolated && !config.ei)
          continue;
        const ReducedModel model = reduced_model(config, offline, size, interpolated);
        SizeReport s;
        s.basis_size = size;
        s.size_c = model.basis.c.size();
        s.size_phi = model.basis.phi.size();
        s.concentration.per_parameter.assign(n, 0.0);
        s.potential.per_parameter.assign(n, 0.0);
        if (interpolated)
        {
          const EIData ei = offline.ei->truncated(std::min(ei_size_for(config, model.basis), offline.ei->size()));
          s.ei_size = ei.size();
          s.ei_residual = ei.relative_residual;
        }
        std::vector<SolveStats> stats(n);
        std::vector<std::ostringstream> logs(n);
        std::vector<double> dist_c(n, 0.0), dist_phi(n, 0.0);
        std::vector<char> failed(n, 0);
        parallel_for(n, config.workers, [&](std::size_t i) {
          Trajectory reduced;
          try
          {
            reduced = model.discretization.solve(mus[i], log ? &logs[i] : nullptr, &stats[i]);
          }
          catch (const SolverError &e)
          {
            if (log)
              logs[i] << "reduced solve failed: " << e.what() << "\n";
            failed[i] = 1;
            const double inf = std::numeric_limits<double>::infinity();
            s.concentration.per_parameter[i] = s.potential.per_parameter[i] = inf;
            dist_c[i] = dist_phi[i] = inf;
            return;
          }
          ArrayContainer c;
          store_trajectory(c, reduced);
          write_container(c, reduced_trajectory_path(config, size, interpolated, i));
          Trajectory full = reconstruct(reduced, model.block_basis);
          s.concentration.per_parameter[i] = error_linfty_l2(detailed[i], full, layout, Field::Concentration);
          s.potential.per_parameter[i] = error_linfty_l2(detailed[i], full, layout, Field::Potential);
          if (!interpolated)
            galerkin[i] = std::move(full);
          else if (galerkin[i].states.empty())
            dist_c[i] = dist_phi[i] = std::numeric_limits<double>::infinity();
          else
          {
            // the empty basis gives a vanishing Galerkin solution
            auto distance = [&](Field f) {
              if (linfty_l2_norm(galerkin[i], layout, f) > 0.0)
                return error_linfty_l2(galerkin[i], full, layout, f);
              return linfty_l2_norm(full, layout, f) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
            };
            dist_c[i] = distance(Field::Concentration);
            dist_phi[i] = distance(Field::Potential);
          }
        });
        Index iterations = 0;
        double newton_seconds = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
          if (log)
            *log << logs[i].str();
          s.failures += failed[i];
          s.online_seconds += stats[i].total_seconds / static_cast<double>(n);
          iterations += stats[i].newton_iterations;
          newton_seconds += stats[i].newton_seconds;
          s.distance_to_galerkin_c = std::max(s.distance_to_galerkin_c, dist_c[i]);
          s.distance_to_galerkin_phi = std::max(s.distance_to_galerkin_phi, dist_phi[i]);
        }
        s.newton_step_seconds = iterations ? newton_seconds / static_cast<double>(iterations) : 0.0;
        finish(s.concentration);
        finish(s.potential);
        if (log)
          *log << (interpolated ? "interpolated" : "galerkin") << " size=" << size << " (" << s.size_c << ","
               << s.size_phi << ") ei=" << s.ei_size << " max_error_c=" << s.concentration.max
               << " max_error_phi=" << s.potential.max << " failures=" << s.failures << "\n";
        (interpolated ? report.interpolated : report.galerkin).push_back(std::move(s));
      }
    }
    write_csv(report.galerkin, config.record_timings, config.output / "errors.csv");
    report.artifacts.push_back(config.output / "errors.csv");
    if (config.ei)
    {
      write_csv(report.interpolated, config.record_timings, config.output / "errors_ei.csv");
      report.artifacts.push_back(config.output / "errors_ei.csv");
    }
    return 0;
  });

  if (config.vtk)
    stage("export", config, log, [&] {
      const auto &geometry = offline.op->geometry();
      for (auto &p : export_vtk(detailed.front(), geometry, config.output / "vtk" / "detailed"))
        report.artifacts.push_back(std::move(p));
      const Index size = config.basis_sizes.back();
      const ReducedModel model = reduced_model(config, offline, size, false);
      const fs::path stored = reduced_trajectory_path(config, size, false, 0);
      if (fs::exists(stored))
      {
        const Trajectory reduced =
          load_trajectory(read_container(stored), VectorSpace::euclidean(model.block_basis.size()));
        for (auto &p : export_vtk(reconstruct(reduced, model.block_basis), geometry,
                                  config.output / "vtk" / ("reduced_r" + std::to_string(size))))
          report.artifacts.push_back(std::move(p));
      }
      return 0;
    });
  return report;
}

ErrorReport run_pipeline(const ExperimentConfig &config, std::ostream *log)
{
  const OfflineData offline = run_offline(config, log);
  return run_study(config, offline, log);
}

} // namespace morcell
