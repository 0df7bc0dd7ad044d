#ifndef MORCELL_TESTS_SUPPORT_HPP
#define MORCELL_TESTS_SUPPORT_HPP

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "morcell/experiment.hpp"
#include "morcell/fv_operator.hpp"
#include "morcell/geometry.hpp"
#include "morcell/random.hpp"

namespace morcell::testing
{

/// Cells along x with the given labels, one cell in y and z.
inline VoxelGeometry line_geometry(const std::vector<Label> &labels, double spacing = 1e-3)
{
  return VoxelGeometry({static_cast<Index>(labels.size()), 1, 1}, spacing, labels, 0);
}

/// The five subdomains in a row: NC, NE, E, PE, PC.
inline VoxelGeometry battery_line(double spacing = 1e-3)
{
  return line_geometry({Label::NegCollector, Label::NegElectrode, Label::Electrolyte, Label::PosElectrode,
                        Label::PosCollector},
                       spacing);
}

/// A 6-cell (or wider, scaled) row of slabs with random particles.
inline VoxelGeometry small_cell(GridDims dims = {6, 4, 4}, std::uint64_t seed = 7)
{
  const LayerLayout layout =
    dims.nx == 6 ? LayerLayout{1, 1, 2, 1, 1, 0.614, 0.742} : scaled_layout(dims.nx, 0.614, 0.742);
  return generate_geometry(dims, layout, seed);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("morcell_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Physically plausible random state: concentrations within 20% of c0 and
/// potentials within 50 mV of the initial guess.
inline Eigen::VectorXd random_state(const BatterySpaceOperator &op, std::mt19937_64 &rng,
                                    const Parameter &mu = {5e-4, 298.0})
{
  Eigen::VectorXd u = op.initial_guess(mu);
  const Index n = op.layout().cells();
  for (Index k = 0; k < n; ++k)
  {
    u[k] *= 1.0 + 0.2 * (2.0 * uniform01(rng) - 1.0);
    u[n + k] += 0.05 * (2.0 * uniform01(rng) - 1.0);
  }
  return u;
}

} // namespace morcell::testing

#endif // MORCELL_TESTS_SUPPORT_HPP
