#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wellprobe/dimension.hpp"
#include "wellprobe/discretization.hpp"
#include "wellprobe/ensemble.hpp"
#include "wellprobe/maxfs.hpp"

namespace wellprobe {

enum class Problem : std::uint8_t {
  WaveWellPosed = 0,
  WaveCaseStudy1 = 1,
  WaveCaseStudy2 = 2,
  LineODE = 3,
  HarmonicOscillator = 4,
  /// The 10-vs-5 contradictory line fixture (majority/minority clusters).
  TwoLineFixture = 5,
};

enum class RunMode : std::uint8_t {
  Ensemble = 0,
  PerimeterScaling = 1,
  DropSearch = 2,
  WeightSweep = 3,
  Kaczmarz = 4,
};

const char* problem_name(Problem problem);
const char* run_mode_name(RunMode mode);
Problem problem_from_name(const std::string& name);
RunMode run_mode_from_name(const std::string& name);

struct OdeParams {
  int n = 39;
  double t_max = 1.0;
  double omega = 1.0;
  std::vector<ConstraintPoint> constraints;
  // Cluster sizes for the two-line fixture.
  int n1 = 10;
  int n2 = 5;
};

/// One patch center for perimeter scaling, in grid units (multiples of dx;
/// the runner converts to physical coordinates).
struct ScalingCenter {
  std::string label;
  double x = 0.0;
  double t = 0.0;
};

struct ScalingParams {
  std::vector<ScalingCenter> centers;
  std::vector<double> radii = {1.5, 2.0, 2.5, 3.0};  // grid units
  double tau_rel = 1e-3;
  double noise_floor_rel = 1e-7;
};

struct DropSearchParams {
  int max_drop = 1;
  long budget = 100000;
  std::vector<RowKind> droppable = {RowKind::InitialCondition,
                                    RowKind::BoundaryCondition,
                                    RowKind::DataConstraint};
};

struct WeightSweepParams {
  std::vector<double> weights = {1.0, 10.0, 100.0, 1000.0};
};

struct KaczmarzParams {
  KaczmarzVariant variant = KaczmarzVariant::Plain;
  double q = 0.7;
  long max_iters = 2000;
  int sample_size = 0;
  double sigma = 1.0;
  double tol = -1.0;
  long trace_every = 1;
};

/// Everything run_experiment needs. Serializes to/from JSON losslessly;
/// unknown keys anywhere in the document are a ConfigError naming the key.
struct ExperimentConfig {
  Problem problem = Problem::WaveWellPosed;
  RunMode mode = RunMode::Ensemble;
  int runs = 200;
  std::uint64_t master_seed = 0;
  int threads = 0;
  std::string out_dir = "out";

  GridSpec grid;                              // wave problems; t_max <= 0
                                              // means the unit-Courant value
  std::optional<ParallelogramSpec> data;      // case studies; unset = default
  std::optional<ReflectorSpec> reflector;     // case study 2; unset = default
  OdeParams ode;
  SolverOptions solver;
  ScalingParams scaling;
  DropSearchParams drop_search;
  WeightSweepParams weight_sweep;
  KaczmarzParams kaczmarz;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
/// Full echo including defaulted fields, so a dump is a complete record.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config_file(const std::string& path);
/// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& config);

/// The assembled system plus whatever reference data the problem carries.
struct ProblemInstance {
  TaggedSystem system;
  std::optional<GridSpec> grid;             // wave problems
  std::optional<Eigen::VectorXd> reference;  // marching truth (wave)
  std::vector<Eigen::VectorXd> line_refs;    // two-line fixture
  std::optional<ParallelogramSpec> data;
  std::optional<ReflectorSpec> reflector;
};

ProblemInstance assemble_problem(const ExperimentConfig& config);

struct RunSummary {
  std::uint64_t config_hash = 0;
  nlohmann::json metrics;
  std::vector<std::string> files;  // relative to out_dir
  std::string out_dir;
};

/// Execute the configured pipeline and write summary.json plus the
/// mode-specific CSVs / heatmaps into config.out_dir. Deterministic: the
/// same config (and seed) produces byte-identical outputs; summary.json
/// carries no timestamps.
RunSummary run_experiment(const ExperimentConfig& config);

}  // namespace wellprobe
