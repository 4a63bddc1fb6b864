#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "wellprobe/solvers.hpp"
#include "wellprobe/tagged_system.hpp"

namespace wellprobe {

/// Minimum-norm least-squares solve with every non-Law row (coefficients and
/// rhs) scaled by `weight`. The residual breakdown is evaluated against the
/// original, unweighted rows, so sweeping the weight shows the law/constraint
/// trade-off directly.
struct WeightedSolveResult {
  double weight = 1.0;
  Solution solution;
  ResidualBreakdown breakdown;
};

WeightedSolveResult weighted_solve(const TaggedSystem& system, double weight,
                                   const SolverOptions& opts = SolverOptions{});

/// One consistent row subset found by exhaustive_drop_search.
struct DropCandidate {
  std::vector<int> dropped_rows;
  Eigen::VectorXd solution;  // min-norm solution of the kept rows
  double residual_on_kept = 0.0;
  /// How many of the original non-Law rows this solution satisfies to tol.
  int satisfied_constraints = 0;
};

struct MaxfsReport {
  std::vector<DropCandidate> candidates;
  long subsets_examined = 0;
  double tol = 0.0;
};

/// Try every subset (size 1..max_drop) of rows whose tag is in
/// droppable_kinds; report each subset whose removal leaves a system the
/// min-norm solve satisfies within tol. tol <= 0 means 1e-8 * max(1, ||b||).
/// Refuses up front (BudgetExceeded) if the subset count exceeds `budget`.
MaxfsReport exhaustive_drop_search(
    const TaggedSystem& system, int max_drop,
    const std::vector<RowKind>& droppable_kinds = {RowKind::InitialCondition,
                                                   RowKind::BoundaryCondition,
                                                   RowKind::DataConstraint},
    double tol = -1.0, long budget = 100000);

/// Single Kaczmarz projection onto row `row_index`:
/// x' = x + (b_i - <a_i, x>) / ||a_i||^2 * a_i.
Eigen::VectorXd kaczmarz_step(const TaggedSystem& system, const Eigen::VectorXd& x,
                              int row_index);

enum class KaczmarzVariant : std::uint8_t {
  /// Rows sampled with probability proportional to ||a_i||^2, all rows.
  Plain = 0,
  /// Rows sampled the same way but restricted to non-Law rows; a projection
  /// is admitted only if the candidate's |residual| is at or below the
  /// q-quantile of a fresh sample of sample_size non-Law residuals.
  Quantile = 1,
  /// Quantile admission plus hard law enforcement: the start point is
  /// projected onto the law-block solution set and every step moves along
  /// P a_i, the row direction projected onto null(A_law).
  QuantileSubspaceConstrained = 2,
};

const char* kaczmarz_variant_name(KaczmarzVariant variant);

struct KaczmarzConfig {
  KaczmarzVariant variant = KaczmarzVariant::Plain;
  long max_iters = 2000;
  /// Quantile level in (0, 1]. q = 1 admits every sampled row, which reduces
  /// Quantile to Plain over the non-Law rows.
  double q = 0.7;
  /// 0 means min(30, number of non-Law rows).
  int sample_size = 0;
  std::uint64_t seed = 0;
  /// Scale of the random start point.
  double sigma = 1.0;
  /// Converged when the q-quantile of |non-Law residuals| (all of them, not a
  /// sample) drops to tol; <= 0 means 1e-12 * max(1, ||b||). Plain instead
  /// checks the full residual norm against the same value.
  double tol = -1.0;
  /// Record a trace row every this many iterations (plus first and last).
  long trace_every = 1;
};

struct KaczmarzTraceRow {
  long iteration = 0;
  double law_residual = 0.0;         // 2-norm over Law rows
  double constraint_quantile = 0.0;  // q-quantile of |non-Law residuals|
  double constraint_max = 0.0;
  std::vector<double> ref_distances;  // 2-norm to each reference vector
};

struct KaczmarzResult {
  Solution solution;
  std::vector<KaczmarzTraceRow> trace;
  bool converged = false;
  /// QuantileSubspaceConstrained: sampled rows discarded because their
  /// projection onto null(A_law) vanished.
  long skipped_rows = 0;
};

/// Randomized Kaczmarz iteration. `references` are optional known solutions
/// (e.g. the exact fixture lines); the trace records the distance to each.
KaczmarzResult run_kaczmarz(const TaggedSystem& system, const KaczmarzConfig& config,
                            const std::vector<Eigen::VectorXd>& references = {});

}  // namespace wellprobe
