#ifndef MORCELL_STORAGE_HPP
#define MORCELL_STORAGE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "morcell/operators.hpp"
#include "morcell/reduction.hpp"
#include "morcell/time_solver.hpp"

namespace morcell
{

/// Named dense arrays persisted in a little-endian binary file:
///   "MORCELL1" | u32 version | u64 count | count x (u32 name length, name,
///   i64 rows, i64 cols, rows*cols doubles column-major)
struct ArrayContainer
{
  static constexpr std::uint32_t version = 1;
  std::map<std::string, Eigen::MatrixXd> arrays;

  const Eigen::MatrixXd &get(const std::string &name) const;
  double scalar(const std::string &name) const;
};

/// Throw IoError on file errors, a bad header or a version mismatch.
void write_container(const ArrayContainer &c, const std::filesystem::path &path);
ArrayContainer read_container(const std::filesystem::path &path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

/// Text manifest: one `key = value` line per entry, keys sorted.
using Manifest = std::map<std::string, std::string>;
void write_manifest(const Manifest &m, const std::filesystem::path &path);
Manifest read_manifest(const std::filesystem::path &path);

void store_trajectory(ArrayContainer &c, const Trajectory &traj, const std::string &prefix = "");
Trajectory load_trajectory(const ArrayContainer &c, const VectorSpace &space, const std::string &prefix = "");

void store_basis(ArrayContainer &c, const ReducedBasis &basis);
ReducedBasis load_basis(const ArrayContainer &c, const VectorSpace &field_space);

void store_ei(ArrayContainer &c, const EIData &ei);
EIData load_ei(const ArrayContainer &c, const VectorSpace &space);

void store_greedy_log(ArrayContainer &c, const GreedyLog &log);
GreedyLog load_greedy_log(const ArrayContainer &c);

} // namespace morcell

#endif // MORCELL_STORAGE_HPP
