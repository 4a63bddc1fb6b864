#include "wellprobe/solvers.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "wellprobe/rng.hpp"

namespace wellprobe {

namespace {

void check_dense_size(const TaggedSystem& system, const char* who) {
  if (std::max(system.n_rows(), system.n_cols()) > kDenseSizeLimit)
    throw SizeLimitExceeded(std::string(who) + ": system exceeds the dense limit of " +
                            std::to_string(kDenseSizeLimit) +
                            "; use the iterative solver instead");
}

double effective_rank_tol(const SolverOptions& opts, int n_rows, int n_cols) {
  if (opts.rank_tol > 0) return opts.rank_tol;
  return std::max(n_rows, n_cols) * std::numeric_limits<double>::epsilon();
}

}  // namespace

const char* solve_status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Feasible:
      return "feasible";
    case SolveStatus::LeastSquares:
      return "least_squares";
    case SolveStatus::IterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

Eigen::VectorXd gaussian_start(int n, double sigma, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = sigma * rng.next_normal();
  return x;
}

Solution min_norm_solve(const TaggedSystem& system, const SolverOptions& opts) {
  check_dense_size(system, "min_norm_solve");
  if (system.n_rows() == 0) throw InvalidArgument("min_norm_solve: empty system");
  const Eigen::MatrixXd a = system.to_dense();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff =
      sv.size() > 0 ? sv[0] * effective_rank_tol(opts, system.n_rows(), system.n_cols())
                    : 0.0;

  // x = V diag(1/s_i) U^T b over singular values above the cutoff.
  const Eigen::VectorXd utb = svd.matrixU().transpose() * system.rhs();
  Eigen::VectorXd scaled = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) scaled[i] = utb[i] / sv[i];

  Solution out;
  out.values = svd.matrixV() * scaled;
  out.residual_norm = residual_norm(system, out.values);
  out.status = out.residual_norm <= opts.effective_tol_feasible(system.rhs_norm())
                   ? SolveStatus::Feasible
                   : SolveStatus::LeastSquares;
  return out;
}

Solution solve_from_start(const TaggedSystem& system, const Eigen::VectorXd& x0,
                          const SolverOptions& opts) {
  if (x0.size() != system.n_cols())
    throw InvalidArgument("solve_from_start: start length does not match n_cols");

  const double norm_a = system.frobenius_norm();
  const long max_iters = opts.effective_max_iters(system.n_cols());

  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = system.rhs() - system.apply(x);
  Eigen::VectorXd s = system.apply_transpose(r);
  Eigen::VectorXd p = s;
  double gamma = s.squaredNorm();

  long it = 0;
  bool stalled = std::sqrt(gamma) <= opts.grad_tol * norm_a * r.norm();
  while (!stalled && it < max_iters) {
    const Eigen::VectorXd q = system.apply(p);
    const double qq = q.squaredNorm();
    if (qq == 0.0) break;  // p has left the row space numerically; give up
    const double alpha = gamma / qq;
    x += alpha * p;
    r -= alpha * q;
    ++it;

    s = system.apply_transpose(r);
    const double gamma_next = s.squaredNorm();
    const double rnorm = r.norm();
    if (rnorm <= opts.res_atol * (norm_a * x.norm() + system.rhs_norm())) break;
    if (std::sqrt(gamma_next) <= opts.grad_tol * norm_a * rnorm) {
      stalled = true;
      break;
    }
    p = s + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }

  Solution out;
  out.values = std::move(x);
  out.residual_norm = residual_norm(system, out.values);
  out.iterations = it;
  if (out.residual_norm <= opts.effective_tol_feasible(system.rhs_norm()))
    out.status = SolveStatus::Feasible;
  else if (stalled)
    out.status = SolveStatus::LeastSquares;
  else
    out.status = SolveStatus::IterationLimit;
  return out;
}

Solution solve_from_seed(const TaggedSystem& system, std::uint64_t seed,
                         const SolverOptions& opts) {
  Solution out = solve_from_start(
      system, gaussian_start(system.n_cols(), opts.sigma, seed), opts);
  out.seed = seed;
  return out;
}

AffineProjector::AffineProjector(const TaggedSystem& subset, const SolverOptions& opts) {
  check_dense_size(subset, "AffineProjector");
  if (subset.n_rows() == 0) throw InvalidArgument("AffineProjector: empty subsystem");
  const Eigen::MatrixXd a = subset.to_dense();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff =
      sv.size() > 0 ? sv[0] * effective_rank_tol(opts, subset.n_rows(), subset.n_cols())
                    : 0.0;
  rank_ = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank_;

  const Eigen::VectorXd utb = svd.matrixU().transpose() * subset.rhs();
  Eigen::VectorXd scaled = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < rank_; ++i) scaled[i] = utb[i] / sv[i];
  particular_ = svd.matrixV() * scaled;
  row_space_ = svd.matrixV().leftCols(rank_);

  const double feas = residual_norm(subset, particular_);
  if (feas > opts.effective_tol_feasible(subset.rhs_norm()))
    throw InfeasibleSubset(
        "AffineProjector: subsystem is inconsistent (best residual " +
        std::to_string(feas) + ")");
}

Eigen::VectorXd AffineProjector::project(const Eigen::VectorXd& x) const {
  if (x.size() != row_space_.rows())
    throw InvalidArgument("AffineProjector::project: length mismatch");
  const Eigen::VectorXd d = x - particular_;
  return particular_ + (d - row_space_ * (row_space_.transpose() * d));
}

Eigen::VectorXd AffineProjector::project_direction(const Eigen::VectorXd& d) const {
  if (d.size() != row_space_.rows())
    throw InvalidArgument("AffineProjector::project_direction: length mismatch");
  return d - row_space_ * (row_space_.transpose() * d);
}

Eigen::VectorXd project_onto_affine_solution_set(const TaggedSystem& subset,
                                                 const Eigen::VectorXd& x,
                                                 const SolverOptions& opts) {
  return AffineProjector(subset, opts).project(x);
}

}  // namespace wellprobe
