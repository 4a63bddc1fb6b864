#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "wellprobe/tagged_system.hpp"

namespace wellprobe {

/// Largest dense dimension the SVD-backed operations accept. The tool is
/// desk-scale by design; anything bigger should use the iterative path.
inline constexpr int kDenseSizeLimit = 4000;

enum class SolveStatus : std::uint8_t {
  /// Residual is within the feasibility tolerance.
  Feasible = 0,
  /// Gradient of the least-squares objective stalled: the iterate is a
  /// least-squares point of an inconsistent system.
  LeastSquares = 1,
  /// Iteration cap reached before either criterion; values hold the best
  /// iterate seen.
  IterationLimit = 2,
};

const char* solve_status_name(SolveStatus status);

struct SolverOptions {
  /// Standard deviation of the N(0, sigma^2 I) start point.
  double sigma = 1.0;
  /// 0 means the default 50 * n_cols.
  long max_iters = 0;
  /// Dimensionless stall tolerance: stop when ||A^T r|| <= grad_tol * ||A||_F * ||r||.
  double grad_tol = 1e-12;
  /// Dimensionless floor: stop when ||r|| <= res_atol * (||A||_F * ||x|| + ||b||).
  /// This is what a consistent system converges to.
  double res_atol = 1e-14;
  /// Residual threshold for declaring a solution feasible. <= 0 means the
  /// default 1e-8 * max(1, ||b||_2).
  double tol_feasible = -1.0;
  /// Relative singular-value cutoff for rank decisions in the dense path.
  /// <= 0 means the default max(n_rows, n_cols) * machine epsilon.
  double rank_tol = -1.0;

  long effective_max_iters(int n_cols) const {
    return max_iters > 0 ? max_iters : 50L * n_cols;
  }
  double effective_tol_feasible(double rhs_norm) const {
    return tol_feasible > 0 ? tol_feasible : 1e-8 * std::max(1.0, rhs_norm);
  }
};

struct Solution {
  Eigen::VectorXd values;
  double residual_norm = 0.0;
  SolveStatus status = SolveStatus::Feasible;
  long iterations = 0;
  /// Seed of the random start point, when one was used.
  std::optional<std::uint64_t> seed;

  bool feasible() const { return status == SolveStatus::Feasible; }
  bool converged() const { return status != SolveStatus::IterationLimit; }
};

/// The deterministic N(0, sigma^2 I) start point used by solve_from_seed.
Eigen::VectorXd gaussian_start(int n, double sigma, std::uint64_t seed);

/// Minimum-norm least-squares solution via dense SVD. Refuses systems with
/// max(n_rows, n_cols) > kDenseSizeLimit.
Solution min_norm_solve(const TaggedSystem& system,
                        const SolverOptions& opts = SolverOptions{});

/// Least-squares solve by conjugate gradient on the normal equations (CGLS),
/// started from a seeded random point. Krylov iterations only ever move
/// inside range(A^T), so the null-space component of the start survives to
/// the converged point: for a consistent system the result is exactly the
/// orthogonal projection of the start onto the affine solution set, which is
/// what makes an ensemble of these solves a null-space sampler.
Solution solve_from_seed(const TaggedSystem& system, std::uint64_t seed,
                         const SolverOptions& opts = SolverOptions{});

/// Same iteration, explicit start point (used internally and by tests).
Solution solve_from_start(const TaggedSystem& system, const Eigen::VectorXd& x0,
                          const SolverOptions& opts = SolverOptions{});

/// Orthogonal projector onto the affine solution set {x : A_sub x = b_sub} of
/// a consistent subsystem. Built once (dense SVD), applied many times; the
/// subspace-constrained Kaczmarz variant keeps one per run.
class AffineProjector {
 public:
  AffineProjector(const TaggedSystem& subset, const SolverOptions& opts = SolverOptions{});

  /// x - A^+ (A x - b): closest point of the solution set.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  /// Projection of a direction onto null(A_sub) (the linear, not affine, part).
  Eigen::VectorXd project_direction(const Eigen::VectorXd& d) const;

  int rank() const { return rank_; }
  int n_cols() const { return static_cast<int>(row_space_.rows()); }
  /// Minimum-norm solution of the subsystem.
  const Eigen::VectorXd& particular() const { return particular_; }

 private:
  Eigen::MatrixXd row_space_;  // n_cols x rank, orthonormal columns
  Eigen::VectorXd particular_;
  int rank_ = 0;
};

/// One-shot convenience wrapper around AffineProjector.
/// Throws InfeasibleSubset if the subsystem is inconsistent.
Eigen::VectorXd project_onto_affine_solution_set(const TaggedSystem& subset,
                                                 const Eigen::VectorXd& x,
                                                 const SolverOptions& opts = SolverOptions{});

}  // namespace wellprobe
