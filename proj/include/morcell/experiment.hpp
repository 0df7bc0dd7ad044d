#ifndef MORCELL_EXPERIMENT_HPP
#define MORCELL_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "morcell/battery_model.hpp"
#include "morcell/errors.hpp"
#include "morcell/fv_operator.hpp"
#include "morcell/reduction.hpp"

namespace morcell
{

/// Everything the experiment depends on. The defaults are the reference setup on
/// a 40x20x20 grid.
struct ExperimentConfig
{
  GridDims dims{40, 20, 20};
  /// Slab widths (neg collector, neg electrode, separator, pos electrode, pos
  /// collector). Empty: scaled from the reference widths to dims.nx.
  std::optional<std::array<Index, 5>> layout;
  double fill_pos = 0.614;
  double fill_neg = 0.742;
  std::uint64_t geometry_seed = 42;
  double domain_length = default_domain_length;
  MaterialTable materials = MaterialTable::reference();

  Index steps = 20;
  double dt = 30.0;
  ParameterBox box;
  std::array<Index, 2> training_grid{3, 3}; // points along I and T
  std::vector<Index> basis_sizes{8, 16, 24, 32};
  Index test_count = 20;
  std::uint64_t test_seed = 20240;
  bool ei = true;
  /// Interpolation points per reduced dimension: M = ei_factor * (r_c + r_phi).
  double ei_factor = 4.0;
  /// Add Jacobian directions along the reduced basis to the interpolation
  /// snapshots (each snapshot then scaled to unit max-norm).
  bool ei_jacobian = true;
  NewtonSettings newton;

  unsigned workers = 1;
  /// When false, timing columns are written as 0 so reruns give identical files.
  bool record_timings = true;
  bool vtk = false;
  std::filesystem::path output = "morcell-out";

  LayerLayout layer_layout() const;
  void validate() const;
  /// Hash of the entries that influence results (not workers, output, timings, vtk).
  std::string hash() const;
};

/// The built-in default configuration as JSON.
std::string default_config_text();
std::string config_to_text(const ExperimentConfig &config);
/// Missing keys take their defaults, unknown keys are rejected. Throws ConfigError.
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::filesystem::path &path);

/// Reference slab widths 5,10,10,10,5 scaled to nx cells: collectors and
/// electrodes are rounded half up, the separator takes the rest.
LayerLayout scaled_layout(Index nx, double fill_pos, double fill_neg);

/// Equidistant grid including the box corners, charge rate varying fastest.
std::vector<Parameter> training_parameters(const ParameterBox &box, Index n_rate, Index n_temperature);

/// Seeded uniform samples of the box (mt19937_64, 53-bit uniforms; I drawn before T).
std::vector<Parameter> sample_test_parameters(const ParameterBox &box, Index count, std::uint64_t seed);

/// Legacy VTK structured points, one file `<prefix>_<step>.vtk` per time step,
/// with cell data `concentration`, `potential` and `label`. Returns the paths.
std::vector<std::filesystem::path> export_vtk(const Trajectory &trajectory, const VoxelGeometry &geometry,
                                              const std::filesystem::path &prefix);

struct VtkCellData
{
  GridDims dims;
  double spacing = 0.0;
  Eigen::VectorXd concentration;
  Eigen::VectorXd potential;
  std::vector<int> label;
};

/// Reads files written by export_vtk back into cell order.
VtkCellData read_vtk(const std::filesystem::path &path);

/// A pipeline stage failed. The message names the stage; the original error is
/// kept for classification.
class StageError : public Error
{
public:
  StageError(std::string stage, const std::string &what, std::exception_ptr cause)
    : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), cause_(std::move(cause))
  {
  }

  const std::string &stage() const { return stage_; }
  const std::exception_ptr &cause() const { return cause_; }

private:
  std::string stage_;
  std::exception_ptr cause_;
};

struct FieldErrors
{
  std::vector<double> per_parameter; // one per test parameter, +inf on solver failure
  double max = 0.0;
  double mean = 0.0;
};

struct SizeReport
{
  Index basis_size = 0;
  Index size_c = 0;
  Index size_phi = 0;
  Index ei_size = 0; // 0 for the Galerkin model
  FieldErrors concentration;
  FieldErrors potential;
  Index failures = 0;
  double online_seconds = 0.0; // mean reduced solve time
  double newton_step_seconds = 0.0; // mean time per reduced Newton iteration
  /// Interpolated model only: relative training residual of the interpolation and
  /// max over the test set of the relative distance to the Galerkin solution.
  double ei_residual = 0.0;
  double distance_to_galerkin_c = 0.0;
  double distance_to_galerkin_phi = 0.0;
};

struct ErrorReport
{
  std::vector<Parameter> test_parameters;
  std::vector<SizeReport> galerkin;
  std::vector<SizeReport> interpolated;
  double detailed_seconds = 0.0; // mean detailed solve time
  std::vector<std::filesystem::path> artifacts;
};

/// Offline results: geometry, detailed model, training data, basis, interpolation.
struct OfflineData
{
  std::shared_ptr<const BatterySpaceOperator> op;
  std::optional<InstationaryDiscretization> detailed;
  std::vector<Parameter> training;
  ReducedBasis basis;
  GreedyLog greedy;
  std::optional<EIData> ei;
};

/// Geometry, detailed operator and discretization for a config.
OfflineData build_model(const ExperimentConfig &config);

/// Detailed solve, cached on disk under <output>/cache keyed by config hash and mu.
Trajectory detailed_solution(const ExperimentConfig &config, const InstationaryDiscretization &detailed,
                             const Parameter &mu, std::ostream *log = nullptr, double *seconds = nullptr);

/// Interpolation size for a basis: ei_factor * (r_c + r_phi), rounded.
Index ei_size_for(const ExperimentConfig &config, const ReducedBasis &basis);

/// geometry -> training snapshots -> POD-Greedy -> interpolation -> artifacts.
OfflineData run_offline(const ExperimentConfig &config, std::ostream *log = nullptr);
/// Reads the artifacts written by run_offline; the model is rebuilt from config.
OfflineData load_offline(const ExperimentConfig &config);

/// Reduced model of the given basis size, interpolated or not.
ReducedModel reduced_model(const ExperimentConfig &config, const OfflineData &offline, Index basis_size,
                           bool interpolated);

/// Error study on the test parameters; writes errors.csv, errors_ei.csv, the
/// reduced trajectories and optionally VTK files.
ErrorReport run_study(const ExperimentConfig &config, const OfflineData &offline, std::ostream *log = nullptr);

ErrorReport run_pipeline(const ExperimentConfig &config, std::ostream *log = nullptr);

std::string csv_header();
void write_csv(const std::vector<SizeReport> &sizes, bool record_timings, const std::filesystem::path &path);

/// Path of the stored reduced coefficient trajectory of a study run.
std::filesystem::path reduced_trajectory_path(const ExperimentConfig &config, Index basis_size,
                                              bool interpolated, std::size_t test_index);

} // namespace morcell

#endif // MORCELL_EXPERIMENT_HPP
