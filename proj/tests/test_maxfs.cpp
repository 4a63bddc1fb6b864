#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "support/oracles.hpp"
#include "wellprobe/discretization.hpp"
#include "wellprobe/maxfs.hpp"

using namespace wellprobe;

namespace {

SparseRow row(std::vector<int> cols, std::vector<double> coeffs, double rhs) {
  SparseRow r;
  r.cols = std::move(cols);
  r.coeffs = std::move(coeffs);
  r.rhs = rhs;
  return r;
}

RowTag tag(RowKind kind) {
  RowTag t;
  t.kind = kind;
  return t;
}

/// y'' = 0 on five nodes plus the three mutually contradictory endpoint
/// values. The workhorse fixture for the weighting and dropping tests.
TaggedSystem contradictory_line() {
  return assemble_line_ode(3, three_contradictory_constraints());
}

}  // namespace

TEST_CASE("weighted_solve trades constraint residual against law residual") {
  const TaggedSystem sys = contradictory_line();

  const WeightedSolveResult w1 = weighted_solve(sys, 1.0);
  const WeightedSolveResult w100 = weighted_solve(sys, 100.0);
  const WeightedSolveResult w10k = weighted_solve(sys, 10000.0);

  // Breakdown is against the *unweighted* rows.
  CHECK(w1.breakdown.total ==
        doctest::Approx(residual(sys, w1.solution.values).norm()));

  const double c1 = w1.breakdown.constraints();
  const double c100 = w100.breakdown.constraints();
  const double c10k = w10k.breakdown.constraints();
  const double l1 = w1.breakdown.law();
  const double l100 = w100.breakdown.law();
  const double l10k = w10k.breakdown.law();

  CHECK(c100 < c1);
  CHECK(c10k < c100);
  CHECK(l100 > l1);
  CHECK(l10k > l100);

  // At weight 1 the two blocks share the misfit; at extreme weight the
  // constraints are honoured nearly exactly and the law eats all of it.
  CHECK(c10k < 1e-3 * c1);
  CHECK(w10k.weight == 10000.0);
}

TEST_CASE("weighted_solve validates the weight") {
  const TaggedSystem sys = contradictory_line();
  CHECK_THROWS_AS(weighted_solve(sys, 0.0), InvalidArgument);
  CHECK_THROWS_AS(weighted_solve(sys, -2.0), InvalidArgument);
}

TEST_CASE("weight 1 reproduces the plain min-norm solve") {
  const TaggedSystem sys = contradictory_line();
  const WeightedSolveResult w = weighted_solve(sys, 1.0);
  const Solution plain = min_norm_solve(sys);
  CHECK((w.solution.values - plain.values).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("drop search finds exactly the three single-constraint repairs") {
  const TaggedSystem sys = contradictory_line();
  const MaxfsReport report = exhaustive_drop_search(sys, 1);

  // 3 droppable BC rows, subsets of size 1.
  CHECK(report.subsets_examined == 3);
  REQUIRE(report.candidates.size() == 3);

  std::set<int> dropped;
  for (const DropCandidate& cand : report.candidates) {
    REQUIRE(cand.dropped_rows.size() == 1);
    dropped.insert(cand.dropped_rows[0]);
    CHECK(cand.residual_on_kept <= 1e-8);
    // Keeping two point values of a straight line satisfies those two.
    CHECK(cand.satisfied_constraints == 2);
    // Each repair is an exact line: zero second differences everywhere.
    const Eigen::VectorXd& y = cand.solution;
    for (int j = 1; j + 1 < y.size(); ++j)
      CHECK(std::abs(y[j - 1] - 2.0 * y[j] + y[j + 1]) <= 1e-8);
  }
  // The three dropped rows are the three distinct constraint rows.
  CHECK(dropped.size() == 3);
  for (int r : dropped) CHECK(sys.tags()[r].kind == RowKind::BoundaryCondition);
}

TEST_CASE("drop search subset bookkeeping at max_drop 2") {
  const TaggedSystem sys = contradictory_line();
  const MaxfsReport report = exhaustive_drop_search(sys, 2);
  // C(3,1) + C(3,2) subsets of the three droppable rows.
  CHECK(report.subsets_examined == 6);
  // Every subset of the contradictory triple leaves a consistent system.
  CHECK(report.candidates.size() == 6);

  std::vector<int> pair_satisfied;
  for (const DropCandidate& cand : report.candidates) {
    CHECK(std::is_sorted(cand.dropped_rows.begin(), cand.dropped_rows.end()));
    if (cand.dropped_rows.size() == 2)
      pair_satisfied.push_back(cand.satisfied_constraints);
  }
  // Keeping only y(0)=0 or only y(0.5)=0 yields the zero line, which happens
  // to satisfy both of those; keeping only y(1)=1 satisfies just itself.
  std::sort(pair_satisfied.begin(), pair_satisfied.end());
  CHECK(pair_satisfied == std::vector<int>{1, 2, 2});
}

TEST_CASE("drop search honours kind restrictions and the budget") {
  const TaggedSystem sys = contradictory_line();

  // Nothing droppable: no ICs in this system.
  const MaxfsReport none =
      exhaustive_drop_search(sys, 1, {RowKind::InitialCondition});
  CHECK(none.subsets_examined == 0);
  CHECK(none.candidates.empty());

  // Law rows droppable too: 3 law + 3 BC rows.
  const MaxfsReport law = exhaustive_drop_search(
      sys, 1, {RowKind::Law, RowKind::BoundaryCondition});
  CHECK(law.subsets_examined == 6);

  CHECK_THROWS_AS(exhaustive_drop_search(sys, 2, {RowKind::BoundaryCondition,
                                                  RowKind::Law},
                                         -1.0, 5),
                  BudgetExceeded);
  CHECK_THROWS_AS(exhaustive_drop_search(sys, 0), InvalidArgument);
}

TEST_CASE("kaczmarz_step is the textbook row projection") {
  // Row 0: x0 + x1 = 3, start (1, 0): residual 2 over ||a||^2 = 2 -> +(1,1).
  const TaggedSystem sys(2, {row({0, 1}, {1.0, 1.0}, 3.0)},
                         {tag(RowKind::DataConstraint)});
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  const Eigen::VectorXd stepped = kaczmarz_step(sys, x, 0);
  CHECK(stepped[0] == doctest::Approx(2.0));
  CHECK(stepped[1] == doctest::Approx(1.0));
  // The stepped point satisfies the row exactly; projecting again is a no-op.
  CHECK((kaczmarz_step(sys, stepped, 0) - stepped).norm() <= 1e-15);

  CHECK_THROWS_AS(kaczmarz_step(sys, x, -1), InvalidArgument);
  CHECK_THROWS_AS(kaczmarz_step(sys, x, 1), InvalidArgument);
  CHECK_THROWS_AS(kaczmarz_step(sys, Eigen::VectorXd::Zero(3), 0), InvalidArgument);
}

TEST_CASE("plain kaczmarz converges on a consistent system") {
  const auto [sys, x_star] = testsupport::random_consistent_system(12, 8, 42);

  KaczmarzConfig config;
  config.variant = KaczmarzVariant::Plain;
  config.max_iters = 20000;
  config.seed = 3;
  config.trace_every = 500;
  const KaczmarzResult result = run_kaczmarz(sys, config, {x_star});

  CHECK(result.converged);
  CHECK(result.solution.status == SolveStatus::Feasible);
  CHECK(residual(sys, result.solution.values).norm() <= 1e-8);
  // Overdetermined consistent system: the unique solution is x_star.
  CHECK((result.solution.values - x_star).norm() <= 1e-6);

  REQUIRE(result.trace.size() >= 2);
  CHECK(result.trace.front().iteration == 0);
  // Distance to the solution decays monotonically in expectation; pin the
  // endpoints rather than every step.
  CHECK(result.trace.back().ref_distances[0] <
        0.01 * result.trace.front().ref_distances[0]);
  CHECK(result.trace.back().constraint_max <= 1e-10);
}

TEST_CASE("kaczmarz is deterministic in the seed") {
  const auto [sys, x_star] = testsupport::random_consistent_system(10, 6, 7);
  KaczmarzConfig config;
  config.max_iters = 50;
  config.seed = 11;
  const KaczmarzResult a = run_kaczmarz(sys, config);
  const KaczmarzResult b = run_kaczmarz(sys, config);
  CHECK((a.solution.values - b.solution.values).norm() == 0.0);
  CHECK(a.trace.size() == b.trace.size());

  KaczmarzConfig other = config;
  other.seed = 12;
  const KaczmarzResult c = run_kaczmarz(sys, other);
  CHECK((a.solution.values - c.solution.values).norm() > 0.0);
}

TEST_CASE("quantile admission shrugs off corrupted rows") {
  // Consistent system with two rows whose rhs has been vandalised: the
  // quantile filter keeps the iterate away from them once it is close to the
  // clean solution. q has to sit well below the clean fraction, otherwise a
  // bad admission sample occasionally lets a corrupted projection through
  // and undoes the progress.
  auto [clean, x_star] = testsupport::random_consistent_system(20, 8, 314);
  std::vector<SparseRow> rows = clean.rows();
  for (int i : {3, 13}) rows[i].rhs += 10.0;
  const TaggedSystem sys(clean.n_cols(), std::move(rows),
                         std::vector<RowTag>(clean.tags()));

  KaczmarzConfig config;
  config.variant = KaczmarzVariant::Quantile;
  config.q = 0.5;  // well under the 90% clean fraction
  config.sample_size = 20;
  config.max_iters = 30000;
  config.seed = 6;
  config.trace_every = 1000;
  const KaczmarzResult result = run_kaczmarz(sys, config, {x_star});

  CHECK(result.converged);
  CHECK((result.solution.values - x_star).norm() <= 1e-6);
  // The corrupted rows are left unsatisfied by exactly their vandalism.
  const Eigen::VectorXd res = residual(sys, result.solution.values);
  for (int i : {3, 13}) CHECK(std::abs(res[i]) > 9.0);
}

TEST_CASE("quantile subspace-constrained kaczmarz settles on the majority line") {
  const TwoLineFixture fixture = make_two_line_fixture();

  KaczmarzConfig config;
  config.variant = KaczmarzVariant::QuantileSubspaceConstrained;
  config.q = 0.6;  // under the 2/3 majority fraction: only line 1 is stable
  config.max_iters = 3000;
  config.trace_every = 100;

  int converged_runs = 0;
  for (int trial = 0; trial < 8; ++trial) {
    config.seed = 100 + trial;
    const KaczmarzResult result =
        run_kaczmarz(fixture.system, config, {fixture.line1, fixture.line2});
    if (!result.converged) continue;
    ++converged_runs;
    const double d1 = result.trace.back().ref_distances[0];
    const double d2 = result.trace.back().ref_distances[1];
    CHECK(d1 <= 1e-6);
    CHECK(d1 < d2);
  }
  CHECK(converged_runs >= 6);
}

TEST_CASE("q = 1 admits every sampled row") {
  const auto [sys, x_star] = testsupport::random_consistent_system(9, 5, 21);
  KaczmarzConfig config;
  config.variant = KaczmarzVariant::Quantile;
  config.q = 1.0;
  config.max_iters = 10000;
  config.seed = 2;
  config.trace_every = 1000;
  const KaczmarzResult result = run_kaczmarz(sys, config);
  CHECK(result.converged);
  CHECK(result.skipped_rows == 0);
  CHECK((result.solution.values - x_star).norm() <= 1e-6);
}

TEST_CASE("subspace-constrained kaczmarz never leaves the law manifold") {
  const TwoLineFixture fixture = make_two_line_fixture(19, 6, 3);

  KaczmarzConfig config;
  config.variant = KaczmarzVariant::QuantileSubspaceConstrained;
  config.q = 0.6;
  config.max_iters = 800;
  config.seed = 5;
  config.trace_every = 1;  // every iteration, so the check is airtight
  const KaczmarzResult result =
      run_kaczmarz(fixture.system, config, {fixture.line1, fixture.line2});

  REQUIRE(!result.trace.empty());
  for (const KaczmarzTraceRow& row : result.trace)
    CHECK(row.law_residual <= 1e-10);

  // Law rows of the final iterate, directly.
  const Eigen::VectorXd res = residual(fixture.system, result.solution.values);
  const auto& tags = fixture.system.tags();
  for (int i = 0; i < fixture.system.n_rows(); ++i)
    if (tags[i].kind == RowKind::Law) CHECK(std::abs(res[i]) <= 1e-10);
}

TEST_CASE("subspace-constrained kaczmarz can land on either line") {
  const TwoLineFixture fixture = make_two_line_fixture();

  KaczmarzConfig config;
  config.variant = KaczmarzVariant::QuantileSubspaceConstrained;
  config.q = 1.0 / 3.0;
  config.max_iters = 3000;
  config.sigma = 1.0;

  bool hit1 = false, hit2 = false;
  for (int trial = 0; trial < 24 && !(hit1 && hit2); ++trial) {
    config.seed = 9000 + trial;
    const KaczmarzResult result =
        run_kaczmarz(fixture.system, config, {fixture.line1, fixture.line2});
    if (!result.converged) continue;
    const double d1 = result.trace.back().ref_distances[0];
    const double d2 = result.trace.back().ref_distances[1];
    if (d1 <= 1e-6) hit1 = true;
    if (d2 <= 1e-6) hit2 = true;
  }
  CHECK(hit1);
  CHECK(hit2);
}

TEST_CASE("kaczmarz config validation") {
  const auto [sys, x_star] = testsupport::random_consistent_system(6, 4, 1);
  KaczmarzConfig config;

  config.q = 0.0;
  CHECK_THROWS_AS(run_kaczmarz(sys, config), InvalidArgument);
  config.q = 1.5;
  CHECK_THROWS_AS(run_kaczmarz(sys, config), InvalidArgument);
  config = KaczmarzConfig{};
  config.max_iters = 0;
  CHECK_THROWS_AS(run_kaczmarz(sys, config), InvalidArgument);
  config = KaczmarzConfig{};
  config.trace_every = 0;
  CHECK_THROWS_AS(run_kaczmarz(sys, config), InvalidArgument);

  // Reference vectors must match the column count.
  config = KaczmarzConfig{};
  CHECK_THROWS_AS(run_kaczmarz(sys, config, {Eigen::VectorXd::Zero(3)}),
                  InvalidArgument);

  // The law-constrained variant needs law rows; this system has none.
  config.variant = KaczmarzVariant::QuantileSubspaceConstrained;
  CHECK_THROWS_AS(run_kaczmarz(sys, config), InvalidArgument);

  // And the quantile variants need non-Law rows.
  const TaggedSystem all_law(2, {row({0, 1}, {1.0, -1.0}, 0.0)},
                             {tag(RowKind::Law)});
  config.variant = KaczmarzVariant::Quantile;
  CHECK_THROWS_AS(run_kaczmarz(all_law, config), InvalidArgument);
}

TEST_CASE("variant names") {
  CHECK(std::string(kaczmarz_variant_name(KaczmarzVariant::Plain)) == "plain");
  CHECK(std::string(kaczmarz_variant_name(KaczmarzVariant::Quantile)) ==
        "quantile");
  CHECK(std::string(kaczmarz_variant_name(
            KaczmarzVariant::QuantileSubspaceConstrained)) ==
        "quantile_subspace_constrained");
}
