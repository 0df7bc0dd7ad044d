#include "morcell/storage.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "morcell/errors.hpp"

namespace morcell
{

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace
{

constexpr char magic[8] = {'M', 'O', 'R', 'C', 'E', 'L', 'L', '1'};

template <typename T> void put(std::ostream &out, const T &v)
{
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename T> T take(std::istream &in, const std::filesystem::path &path)
{
  T v{};
  if (!in.read(reinterpret_cast<char *>(&v), sizeof v))
    throw IoError("truncated container: " + path.string());
  return v;
}

Eigen::MatrixXd row(std::initializer_list<double> values)
{
  Eigen::MatrixXd m(1, static_cast<Index>(values.size()));
  Index j = 0;
  for (double v : values)
    m(0, j++) = v;
  return m;
}

Eigen::MatrixXd index_row(const std::vector<Index> &v)
{
  Eigen::MatrixXd m(1, static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    m(0, static_cast<Index>(i)) = static_cast<double>(v[i]);
  return m;
}

std::vector<Index> indices_of(const Eigen::MatrixXd &m)
{
  std::vector<Index> v(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i)
    v[static_cast<std::size_t>(i)] = static_cast<Index>(m.data()[i]);
  return v;
}

} // namespace

const Eigen::MatrixXd &ArrayContainer::get(const std::string &name) const
{
  const auto it = arrays.find(name);
  if (it == arrays.end())
    throw IoError("container has no array '" + name + "'");
  return it->second;
}

double ArrayContainer::scalar(const std::string &name) const
{
  const auto &m = get(name);
  if (m.size() != 1)
    throw IoError("array '" + name + "' is not a scalar");
  return m(0, 0);
}

void write_container(const ArrayContainer &c, const std::filesystem::path &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open for writing: " + path.string());
  out.write(magic, sizeof magic);
  put(out, ArrayContainer::version);
  put(out, static_cast<std::uint64_t>(c.arrays.size()));
  for (const auto &[name, m] : c.arrays)
  {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(out, static_cast<std::int64_t>(m.rows()));
    put(out, static_cast<std::int64_t>(m.cols()));
    out.write(reinterpret_cast<const char *>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out)
    throw IoError("write failed: " + path.string());
}

ArrayContainer read_container(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open: " + path.string());
  char head[sizeof magic];
  if (!in.read(head, sizeof head) || std::memcmp(head, magic, sizeof magic) != 0)
    throw IoError("not a morcell container: " + path.string());
  const auto version = take<std::uint32_t>(in, path);
  if (version != ArrayContainer::version)
    throw IoError("unsupported container version " + std::to_string(version) + ": " + path.string());
  const auto count = take<std::uint64_t>(in, path);
  ArrayContainer c;
  for (std::uint64_t k = 0; k < count; ++k)
  {
    const auto len = take<std::uint32_t>(in, path);
    if (len > 4096)
      throw IoError("corrupt array name in " + path.string());
    std::string name(len, '\0');
    if (!in.read(name.data(), len))
      throw IoError("truncated container: " + path.string());
    const auto rows = take<std::int64_t>(in, path);
    const auto cols = take<std::int64_t>(in, path);
    if (rows < 0 || cols < 0 || (cols > 0 && rows > (std::int64_t{1} << 40) / cols))
      throw IoError("corrupt array shape in " + path.string());
    Eigen::MatrixXd m(rows, cols);
    if (!in.read(reinterpret_cast<char *>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
      throw IoError("truncated container: " + path.string());
    c.arrays.emplace(std::move(name), std::move(m));
  }
  return c;
}

std::uint64_t fnv1a(std::string_view data)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data)
  {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const Manifest &m, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open for writing: " + path.string());
  for (const auto &[k, v] : m)
    out << k << " = " << v << '\n';
  if (!out)
    throw IoError("write failed: " + path.string());
}

Manifest read_manifest(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open: " + path.string());
  Manifest m;
  std::string line;
  int number = 0;
  while (std::getline(in, line))
  {
    ++number;
    if (line.empty())
      continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw ParseError(path.string() + ": malformed manifest line", number);
    m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

void store_trajectory(ArrayContainer &c, const Trajectory &traj, const std::string &prefix)
{
  c.arrays[prefix + "states"] = traj.states.data();
  c.arrays[prefix + "meta"] = row({traj.dt, traj.mu.charge_rate, traj.mu.temperature});
}

Trajectory load_trajectory(const ArrayContainer &c, const VectorSpace &space, const std::string &prefix)
{
  const auto &states = c.get(prefix + "states");
  const auto &meta = c.get(prefix + "meta");
  if (states.rows() != space.dim || meta.size() != 3)
    throw IoError("stored trajectory '" + prefix + "' does not match the discretization");
  Trajectory t;
  t.states = VectorArray(space, states);
  t.dt = meta(0, 0);
  t.mu = {meta(0, 1), meta(0, 2)};
  return t;
}

void store_basis(ArrayContainer &c, const ReducedBasis &basis)
{
  c.arrays["basis_c"] = basis.c.data();
  c.arrays["basis_phi"] = basis.phi.data();
}

ReducedBasis load_basis(const ArrayContainer &c, const VectorSpace &field_space)
{
  const auto &bc = c.get("basis_c");
  const auto &bp = c.get("basis_phi");
  if ((bc.cols() && bc.rows() != field_space.dim) || (bp.cols() && bp.rows() != field_space.dim))
    throw IoError("stored basis does not match the discretization");
  return {VectorArray(field_space, bc.cols() ? bc : Eigen::MatrixXd(field_space.dim, 0)),
          VectorArray(field_space, bp.cols() ? bp : Eigen::MatrixXd(field_space.dim, 0))};
}

void store_ei(ArrayContainer &c, const EIData &ei)
{
  c.arrays["ei_collateral"] = ei.collateral_basis.data();
  c.arrays["ei_dofs"] = index_row(ei.interpolation_dofs);
  c.arrays["ei_matrix"] = ei.interpolation_matrix;
  Eigen::MatrixXd errors(1, static_cast<Index>(ei.max_errors.size()));
  for (std::size_t i = 0; i < ei.max_errors.size(); ++i)
    errors(0, static_cast<Index>(i)) = ei.max_errors[i];
  c.arrays["ei_max_errors"] = errors;
  c.arrays["ei_relative_residual"] = row({ei.relative_residual});
}

EIData load_ei(const ArrayContainer &c, const VectorSpace &space)
{
  EIData ei;
  const auto &u = c.get("ei_collateral");
  if (u.cols() && u.rows() != space.dim)
    throw IoError("stored interpolation basis does not match the discretization");
  ei.collateral_basis = VectorArray(space, u.cols() ? u : Eigen::MatrixXd(space.dim, 0));
  ei.interpolation_dofs = indices_of(c.get("ei_dofs"));
  ei.interpolation_matrix = c.get("ei_matrix");
  const auto &errors = c.get("ei_max_errors");
  ei.max_errors.assign(errors.data(), errors.data() + errors.size());
  ei.relative_residual = c.scalar("ei_relative_residual");
  if (static_cast<Index>(ei.interpolation_dofs.size()) != ei.collateral_basis.size())
    throw IoError("stored interpolation data is inconsistent");
  return ei;
}

void store_greedy_log(ArrayContainer &c, const GreedyLog &log)
{
  const Index n = static_cast<Index>(log.records.size());
  Eigen::MatrixXd rec(n, 8);
  for (Index i = 0; i < n; ++i)
  {
    const auto &r = log.records[static_cast<std::size_t>(i)];
    rec.row(i) << static_cast<double>(r.iteration), static_cast<double>(r.selected), r.mu.charge_rate,
      r.mu.temperature, r.max_error, static_cast<double>(r.size_c), static_cast<double>(r.size_phi), r.seconds;
  }
  c.arrays["greedy_records"] = rec;
  const Index m = log.errors.empty() ? 0 : static_cast<Index>(log.errors.front().size());
  Eigen::MatrixXd err(static_cast<Index>(log.errors.size()), m);
  for (std::size_t i = 0; i < log.errors.size(); ++i)
    for (Index j = 0; j < m; ++j)
      err(static_cast<Index>(i), j) = log.errors[i][static_cast<std::size_t>(j)];
  c.arrays["greedy_errors"] = err;
}

GreedyLog load_greedy_log(const ArrayContainer &c)
{
  GreedyLog log;
  const auto &rec = c.get("greedy_records");
  if (rec.rows() && rec.cols() != 8)
    throw IoError("stored greedy log is malformed");
  for (Index i = 0; i < rec.rows(); ++i)
  {
    GreedyRecord r;
    r.iteration = static_cast<Index>(rec(i, 0));
    r.selected = static_cast<Index>(rec(i, 1));
    r.mu = {rec(i, 2), rec(i, 3)};
    r.max_error = rec(i, 4);
    r.size_c = static_cast<Index>(rec(i, 5));
    r.size_phi = static_cast<Index>(rec(i, 6));
    r.seconds = rec(i, 7);
    log.records.push_back(r);
  }
  const auto &err = c.get("greedy_errors");
  for (Index i = 0; i < err.rows(); ++i)
  {
    std::vector<double> row_values(static_cast<std::size_t>(err.cols()));
    for (Index j = 0; j < err.cols(); ++j)
      row_values[static_cast<std::size_t>(j)] = err(i, j);
    log.errors.push_back(std::move(row_values));
  }
  return log;
}

} // namespace morcell
