#include "wellprobe/maxfs.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "wellprobe/rng.hpp"

namespace wellprobe {

WeightedSolveResult weighted_solve(const TaggedSystem& system, double weight,
                                   const SolverOptions& opts) {
  if (!(weight > 0)) throw InvalidArgument("weighted_solve: weight must be positive");

  std::vector<SparseRow> rows = system.rows();
  for (int i = 0; i < system.n_rows(); ++i) {
    if (system.tag(i).kind == RowKind::Law) continue;
    for (double& c : rows[i].coeffs) c *= weight;
    rows[i].rhs *= weight;
  }
  TaggedSystem scaled(system.n_cols(), std::move(rows), system.tags(),
                      system.grid_shape());

  WeightedSolveResult out;
  out.weight = weight;
  out.solution = min_norm_solve(scaled, opts);
  // Report the solution against the *unweighted* rows.
  out.solution.residual_norm = residual_norm(system, out.solution.values);
  out.breakdown = residual_breakdown(system, out.solution.values);
  return out;
}

MaxfsReport exhaustive_drop_search(const TaggedSystem& system, int max_drop,
                                   const std::vector<RowKind>& droppable_kinds,
                                   double tol, long budget) {
  if (max_drop < 1) throw InvalidArgument("exhaustive_drop_search: max_drop >= 1");

  std::vector<int> droppable;
  for (int i = 0; i < system.n_rows(); ++i)
    for (RowKind k : droppable_kinds)
      if (system.tag(i).kind == k) {
        droppable.push_back(i);
        break;
      }

  const int d = static_cast<int>(droppable.size());
  const int k_max = std::min(max_drop, d);

  // Count subsets of size 1..k_max, refusing before any work if over budget.
  long total = 0;
  for (int k = 1; k <= k_max; ++k) {
    double binom = 1.0;
    for (int j = 0; j < k; ++j) binom = binom * (d - j) / (j + 1);
    total += static_cast<long>(binom + 0.5);
    if (total > budget)
      throw BudgetExceeded("exhaustive_drop_search: " + std::to_string(total) +
                           "+ subsets exceed the budget of " + std::to_string(budget));
  }

  MaxfsReport report;
  report.tol = tol > 0 ? tol : 1e-8 * std::max(1.0, system.rhs_norm());

  std::vector<int> constraint_rows;
  for (int i = 0; i < system.n_rows(); ++i)
    if (system.tag(i).kind != RowKind::Law) constraint_rows.push_back(i);

  std::vector<bool> dropped(system.n_rows(), false);
  std::vector<int> subset;
  auto try_subset = [&]() {
    ++report.subsets_examined;
    std::vector<int> keep;
    keep.reserve(system.n_rows() - subset.size());
    for (int i = 0; i < system.n_rows(); ++i)
      if (!dropped[i]) keep.push_back(i);
    if (keep.empty()) return;

    const TaggedSystem sub = system.subsystem(keep);
    const Solution sol = min_norm_solve(sub);
    if (sol.residual_norm > report.tol) return;

    DropCandidate cand;
    cand.dropped_rows = subset;
    cand.solution = sol.values;
    cand.residual_on_kept = sol.residual_norm;
    for (int i : constraint_rows)
      if (std::abs(system.row(i).dot(sol.values) - system.row(i).rhs) <= report.tol)
        ++cand.satisfied_constraints;
    report.candidates.push_back(std::move(cand));
  };

  // Lexicographic enumeration of index combinations, sizes ascending.
  auto recurse = [&](auto&& self, int start, int remaining) -> void {
    if (remaining == 0) {
      try_subset();
      return;
    }
    for (int pos = start; pos <= d - remaining; ++pos) {
      subset.push_back(droppable[pos]);
      dropped[droppable[pos]] = true;
      self(self, pos + 1, remaining - 1);
      dropped[droppable[pos]] = false;
      subset.pop_back();
    }
  };
  for (int k = 1; k <= k_max; ++k) recurse(recurse, 0, k);

  return report;
}

Eigen::VectorXd kaczmarz_step(const TaggedSystem& system, const Eigen::VectorXd& x,
                              int row_index) {
  if (row_index < 0 || row_index >= system.n_rows())
    throw InvalidArgument("kaczmarz_step: row index out of range");
  if (x.size() != system.n_cols())
    throw InvalidArgument("kaczmarz_step: vector length mismatch");

  const SparseRow& row = system.row(row_index);
  const double sq = system.row_squared_norm(row_index);
  const double scale = (row.rhs - row.dot(x)) / sq;
  Eigen::VectorXd out = x;
  for (std::size_t j = 0; j < row.cols.size(); ++j)
    out[row.cols[j]] += scale * row.coeffs[j];
  return out;
}

const char* kaczmarz_variant_name(KaczmarzVariant variant) {
  switch (variant) {
    case KaczmarzVariant::Plain:
      return "plain";
    case KaczmarzVariant::Quantile:
      return "quantile";
    case KaczmarzVariant::QuantileSubspaceConstrained:
      return "quantile_subspace_constrained";
  }
  return "unknown";
}

namespace {

// Norm^2-weighted sampling over a fixed row list.
class RowSampler {
 public:
  RowSampler(const TaggedSystem& system, const std::vector<int>& rows) : rows_(rows) {
    cumulative_.reserve(rows.size());
    double acc = 0.0;
    for (int i : rows) {
      acc += system.row_squared_norm(i);
      cumulative_.push_back(acc);
    }
  }

  int draw(SplitMix64& rng) const {
    const double u = rng.next_unit() * cumulative_.back();
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t pos =
        std::min(static_cast<std::size_t>(it - cumulative_.begin()),
                 rows_.size() - 1);
    return rows_[pos];
  }

 private:
  std::vector<int> rows_;
  std::vector<double> cumulative_;
};

double nearest_rank_quantile(std::vector<double>& values, double q) {
  std::sort(values.begin(), values.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(values.size())));
  const std::size_t idx = std::min(std::max<std::size_t>(rank, 1), values.size()) - 1;
  return values[idx];
}

}  // namespace

KaczmarzResult run_kaczmarz(const TaggedSystem& system, const KaczmarzConfig& config,
                            const std::vector<Eigen::VectorXd>& references) {
  if (!(config.q > 0) || config.q > 1)
    throw InvalidArgument("run_kaczmarz: q must be in (0, 1]");
  if (config.max_iters < 1) throw InvalidArgument("run_kaczmarz: max_iters >= 1");
  if (config.trace_every < 1) throw InvalidArgument("run_kaczmarz: trace_every >= 1");
  for (const Eigen::VectorXd& ref : references)
    if (ref.size() != system.n_cols())
      throw InvalidArgument("run_kaczmarz: reference length mismatch");

  const std::vector<int> law_rows = system.rows_of_kind(RowKind::Law);
  std::vector<int> constraint_rows;
  for (int i = 0; i < system.n_rows(); ++i)
    if (system.tag(i).kind != RowKind::Law) constraint_rows.push_back(i);

  const bool quantile_variant = config.variant != KaczmarzVariant::Plain;
  const bool subspace = config.variant == KaczmarzVariant::QuantileSubspaceConstrained;
  if (quantile_variant && constraint_rows.empty())
    throw InvalidArgument("run_kaczmarz: quantile variants need non-Law rows");
  if (subspace && law_rows.empty())
    throw InvalidArgument(
        "run_kaczmarz: the subspace-constrained variant needs Law rows");

  const int sample_size =
      config.sample_size > 0
          ? config.sample_size
          : std::min(30, static_cast<int>(constraint_rows.size()));
  const double tol =
      config.tol > 0 ? config.tol : 1e-12 * std::max(1.0, system.rhs_norm());

  SplitMix64 rng(config.seed);
  Eigen::VectorXd x(system.n_cols());
  for (int i = 0; i < x.size(); ++i) x[i] = config.sigma * rng.next_normal();

  // Hard law enforcement: start on the law solution set, move only inside
  // its tangent space.
  std::unique_ptr<AffineProjector> law_projector;
  std::unordered_map<int, std::pair<Eigen::VectorXd, double>> projected_rows;
  if (subspace) {
    law_projector = std::make_unique<AffineProjector>(system.law_block());
    x = law_projector->project(x);
    for (int i : constraint_rows) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(system.n_cols());
      const SparseRow& row = system.row(i);
      for (std::size_t j = 0; j < row.cols.size(); ++j)
        a[row.cols[j]] = row.coeffs[j];
      Eigen::VectorXd pa = law_projector->project_direction(a);
      const double sq = pa.squaredNorm();
      const double drop = 1e-28 * system.row_squared_norm(i);
      projected_rows.emplace(i, std::make_pair(std::move(pa), sq <= drop ? 0.0 : sq));
    }
  }

  std::vector<int> sampled_rows = constraint_rows;
  if (!quantile_variant) {
    sampled_rows.resize(system.n_rows());
    std::iota(sampled_rows.begin(), sampled_rows.end(), 0);
  }
  const RowSampler sampler(system, sampled_rows);

  KaczmarzResult result;

  auto constraint_abs_residuals = [&]() {
    std::vector<double> out;
    out.reserve(constraint_rows.size());
    for (int i : constraint_rows)
      out.push_back(std::abs(system.row(i).dot(x) - system.row(i).rhs));
    return out;
  };

  auto law_residual_norm = [&]() {
    double acc = 0.0;
    for (int i : law_rows) {
      const double r = system.row(i).dot(x) - system.row(i).rhs;
      acc += r * r;
    }
    return std::sqrt(acc);
  };

  auto record = [&](long iteration) {
    KaczmarzTraceRow row;
    row.iteration = iteration;
    row.law_residual = law_residual_norm();
    if (!constraint_rows.empty()) {
      std::vector<double> abs_res = constraint_abs_residuals();
      row.constraint_max = *std::max_element(abs_res.begin(), abs_res.end());
      row.constraint_quantile = nearest_rank_quantile(abs_res, config.q);
    }
    for (const Eigen::VectorXd& ref : references)
      row.ref_distances.push_back((x - ref).norm());
    result.trace.push_back(std::move(row));
  };

  auto converged_now = [&]() {
    if (config.variant == KaczmarzVariant::Plain)
      return residual_norm(system, x) <= tol;
    std::vector<double> abs_res = constraint_abs_residuals();
    return nearest_rank_quantile(abs_res, config.q) <= tol;
  };

  record(0);
  long it = 0;
  std::vector<int> candidates(sample_size);
  std::vector<double> cand_res(sample_size);
  while (it < config.max_iters && !result.converged) {
    ++it;
    if (config.variant == KaczmarzVariant::Plain) {
      x = kaczmarz_step(system, x, sampler.draw(rng));
    } else {
      for (int j = 0; j < sample_size; ++j) {
        candidates[j] = sampler.draw(rng);
        cand_res[j] =
            std::abs(system.row(candidates[j]).dot(x) - system.row(candidates[j]).rhs);
      }
      std::vector<double> sorted = cand_res;
      const double threshold = nearest_rank_quantile(sorted, config.q);

      std::vector<int> admitted;
      for (int j = 0; j < sample_size; ++j) {
        if (cand_res[j] > threshold) continue;
        if (subspace && projected_rows.at(candidates[j]).second == 0.0) {
          ++result.skipped_rows;
          continue;
        }
        admitted.push_back(candidates[j]);
      }
      if (!admitted.empty()) {
        const std::size_t pick = static_cast<std::size_t>(
            rng.next_unit() * static_cast<double>(admitted.size()));
        const int row_idx = admitted[std::min(pick, admitted.size() - 1)];
        if (subspace) {
          const auto& [pa, sq] = projected_rows.at(row_idx);
          const SparseRow& row = system.row(row_idx);
          x += ((row.rhs - row.dot(x)) / sq) * pa;
        } else {
          x = kaczmarz_step(system, x, row_idx);
        }
      }
    }
    result.converged = converged_now();
    if (result.converged || it % config.trace_every == 0 || it == config.max_iters)
      record(it);
  }

  result.solution.values = x;
  result.solution.residual_norm = residual_norm(system, x);
  result.solution.iterations = it;
  result.solution.seed = config.seed;
  const double feas_tol = SolverOptions{}.effective_tol_feasible(system.rhs_norm());
  if (result.solution.residual_norm <= feas_tol)
    result.solution.status = SolveStatus::Feasible;
  else if (result.converged)
    result.solution.status = SolveStatus::LeastSquares;
  else
    result.solution.status = SolveStatus::IterationLimit;
  return result;
}

}  // namespace wellprobe
