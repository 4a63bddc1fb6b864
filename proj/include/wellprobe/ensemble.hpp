#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wellprobe/solvers.hpp"
#include "wellprobe/tagged_system.hpp"

namespace wellprobe {

struct EnsembleOptions {
  /// Number of runs M.
  int runs = 200;
  std::uint64_t master_seed = 0;
  SolverOptions solver;
  /// Worker threads; 0 consults the WELLPROBE_THREADS environment variable,
  /// then hardware_concurrency. Run k always uses child_seed(master_seed, k),
  /// so the ensemble content is identical for any thread count.
  int threads = 0;
};

struct SolutionEnsemble {
  int n_cols = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t system_hash = 0;
  std::vector<Solution> runs;

  int size() const { return static_cast<int>(runs.size()); }
};

/// M independent seeded solves of the same system.
SolutionEnsemble run_ensemble(const TaggedSystem& system, const EnsembleOptions& opts);

struct StatsReport {
  Eigen::VectorXd mean;
  /// Population variance (divides by the number of included runs).
  Eigen::VectorXd variance;
  /// mean - ground_truth, when a ground truth was supplied.
  std::optional<Eigen::VectorXd> error_of_mean;
  int included_runs = 0;
  int total_runs = 0;
  int feasible_runs = 0;
};

/// Pointwise mean/variance over the ensemble. Runs that did not reach the
/// feasibility tolerance are excluded unless include_nonfeasible is set (they
/// are legitimate on inconsistent systems, where no run can be feasible).
/// Throws InvalidArgument when fewer than two runs remain.
StatsReport compute_stats(const SolutionEnsemble& ensemble,
                          bool include_nonfeasible = false,
                          const std::optional<Eigen::VectorXd>& ground_truth = std::nullopt);

/// mask[i] = variance[i] <= rel_tol * max(variance). The empirical
/// "determined here" indicator.
std::vector<std::uint8_t> low_variance_mask(const Eigen::VectorXd& variance,
                                            double rel_tol = 1e-8);

/// Flat CSV, one row per run, exactly n_cols value columns.
void write_ensemble_csv(const std::string& path, const SolutionEnsemble& ensemble);

/// Binary cache of a full ensemble, keyed by (system hash, master seed, run
/// count, solver options). load returns nullopt on any key mismatch or
/// malformed file, so callers fall back to recomputing.
void save_ensemble_cache(const std::string& path, const SolutionEnsemble& ensemble,
                         const EnsembleOptions& opts);
std::optional<SolutionEnsemble> load_ensemble_cache(const std::string& path,
                                                    const TaggedSystem& system,
                                                    const EnsembleOptions& opts);

}  // namespace wellprobe
