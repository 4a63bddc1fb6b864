#include "wellprobe/discretization.hpp"

#include <algorithm>
#include <cmath>

namespace wellprobe {

namespace {

// Coefficients whose magnitude falls below this are structural zeros (e.g.
// the law-row center at Courant number 1, where -2 + 2C^2 vanishes up to
// rounding) and are not stored.
constexpr double kCoeffDropTol = 1e-12;

struct RowBuilder {
  std::vector<std::pair<int, double>> entries;
  double rhs = 0.0;

  void add(int col, double coeff) {
    if (std::abs(coeff) <= kCoeffDropTol) return;
    entries.emplace_back(col, coeff);
  }

  SparseRow finish() {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseRow row;
    row.cols.reserve(entries.size());
    row.coeffs.reserve(entries.size());
    for (const auto& [col, coeff] : entries) {
      row.cols.push_back(col);
      row.coeffs.push_back(coeff);
    }
    row.rhs = rhs;
    return row;
  }
};

ScalarField resolve_u0(const ScalarField& u0) {
  return u0 ? u0 : ScalarField(default_u0);
}

ScalarField resolve_u0t(const ScalarField& u0t, double c) {
  return u0t ? u0t : ScalarField([c](double x) { return default_u0t(x, c); });
}

}  // namespace

GridSpec GridSpec::unit_courant(int n_x, int n_t, double c) {
  GridSpec g;
  g.n_x = n_x;
  g.n_t = n_t;
  g.x_min = 0.0;
  g.x_max = 1.0;
  g.c = c;
  g.t_max = (n_t - 1) * g.dx() / c;
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (n_x < 3 || n_t < 3)
    throw InvalidArgument("GridSpec: need n_x >= 3 and n_t >= 3");
  if (!(x_max > x_min)) throw InvalidArgument("GridSpec: x_max must exceed x_min");
  if (!(t_max > 0.0)) throw InvalidArgument("GridSpec: t_max must be positive");
  if (!(c > 0.0)) throw InvalidArgument("GridSpec: wave speed must be positive");
  if (courant() > 1.0 + 1e-12)
    throw InvalidArgument("GridSpec: Courant number " + std::to_string(courant()) +
                          " violates the CFL bound c*dt/dx <= 1");
}

double default_u0(double) { return 0.0; }

double default_u0t(double x, double c) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sin(two_pi * x / c);
}

ParallelogramSpec ParallelogramSpec::default_for(const GridSpec& grid) {
  ParallelogramSpec p;
  p.t_lo = 2;
  p.t_hi = grid.n_t / 3;
  p.x_anchor = 2;
  p.slant = 1;
  p.width = std::max(4, grid.n_x / 3);
  return p;
}

bool ParallelogramSpec::contains(int space, int time) const {
  if (time < t_lo || time > t_hi) return false;
  const int x0 = x_anchor + slant * (time - t_lo);
  return space >= x0 && space < x0 + width;
}

std::vector<std::pair<int, int>> ParallelogramSpec::nodes(const GridSpec& grid) const {
  if (t_hi < t_lo) throw InvalidArgument("ParallelogramSpec: t_hi < t_lo");
  if (width < 0) throw InvalidArgument("ParallelogramSpec: width must be >= 0");
  if (slant < -1 || slant > 1)
    throw InvalidArgument("ParallelogramSpec: slant must be -1, 0 or +1");
  std::vector<std::pair<int, int>> out;
  if (width == 0) return out;  // explicitly empty data set
  out.reserve(static_cast<std::size_t>(t_hi - t_lo + 1) * width);
  for (int n = t_lo; n <= t_hi; ++n) {
    const int x0 = x_anchor + slant * (n - t_lo);
    if (n < 0 || n >= grid.n_t || x0 < 0 || x0 + width - 1 >= grid.n_x)
      throw InvalidArgument("ParallelogramSpec: node set leaves the grid at time " +
                            std::to_string(n));
    for (int i = x0; i < x0 + width; ++i) out.emplace_back(i, n);
  }
  return out;
}

ReflectorSpec ReflectorSpec::default_for(const GridSpec& grid) {
  ReflectorSpec r;
  r.t_begin = grid.n_t / 2;
  r.t_end = grid.n_t - 1;
  return r;
}

namespace {

void append_law_rows(const GridSpec& grid, std::vector<SparseRow>& rows,
                     std::vector<RowTag>& tags) {
  const GridShape shape = grid.shape();
  const double c2 = grid.courant() * grid.courant();
  for (int n = 1; n <= grid.n_t - 2; ++n) {
    for (int i = 1; i <= grid.n_x - 2; ++i) {
      RowBuilder b;
      b.add(shape.node(i, n - 1), 1.0);
      b.add(shape.node(i - 1, n), -c2);
      b.add(shape.node(i, n), -2.0 + 2.0 * c2);
      b.add(shape.node(i + 1, n), -c2);
      b.add(shape.node(i, n + 1), 1.0);
      b.rhs = 0.0;
      rows.push_back(b.finish());
      tags.push_back(RowTag{RowKind::Law, i, n});
    }
  }
}

}  // namespace

TaggedSystem assemble_wave_wellposed(const GridSpec& grid, const ScalarField& u0_in,
                                     const ScalarField& u0t_in) {
  grid.validate();
  const ScalarField u0 = resolve_u0(u0_in);
  const ScalarField u0t = resolve_u0t(u0t_in, grid.c);
  const GridShape shape = grid.shape();
  const double c2 = grid.courant() * grid.courant();

  std::vector<SparseRow> rows;
  std::vector<RowTag> tags;
  rows.reserve(static_cast<std::size_t>(grid.n_x) * grid.n_t);
  tags.reserve(rows.capacity());

  // Value ICs across the whole initial row.
  for (int i = 0; i < grid.n_x; ++i) {
    RowBuilder b;
    b.add(shape.node(i, 0), 1.0);
    b.rhs = u0(grid.x_at(i));
    rows.push_back(b.finish());
    tags.push_back(RowTag{RowKind::InitialCondition, i, 0});
  }

  // Derivative ICs on the interior of the initial row, with the ghost node
  // eliminated through the law:
  //   u^1_i = u^0_i + dt*u0t(x_i) + (C^2/2)(u^0_{i+1} - 2 u^0_i + u^0_{i-1}).
  for (int i = 1; i <= grid.n_x - 2; ++i) {
    RowBuilder b;
    b.add(shape.node(i - 1, 0), -0.5 * c2);
    b.add(shape.node(i, 0), c2 - 1.0);
    b.add(shape.node(i + 1, 0), -0.5 * c2);
    b.add(shape.node(i, 1), 1.0);
    b.rhs = grid.dt() * u0t(grid.x_at(i));
    rows.push_back(b.finish());
    tags.push_back(RowTag{RowKind::InitialCondition, i, 0});
  }

  // Homogeneous Dirichlet walls for every level after the initial row.
  for (int n = 1; n <= grid.n_t - 1; ++n) {
    for (int i : {0, grid.n_x - 1}) {
      RowBuilder b;
      b.add(shape.node(i, n), 1.0);
      b.rhs = 0.0;
      rows.push_back(b.finish());
      tags.push_back(RowTag{RowKind::BoundaryCondition, i, n});
    }
  }

  append_law_rows(grid, rows, tags);

  return TaggedSystem(grid.n_x * grid.n_t, std::move(rows), std::move(tags), shape);
}

Eigen::VectorXd wave_reference_solution(const GridSpec& grid, const ScalarField& u0_in,
                                        const ScalarField& u0t_in) {
  grid.validate();
  const ScalarField u0 = resolve_u0(u0_in);
  const ScalarField u0t = resolve_u0t(u0t_in, grid.c);
  const GridShape shape = grid.shape();
  const double c2 = grid.courant() * grid.courant();

  Eigen::VectorXd u(grid.n_x * grid.n_t);
  for (int i = 0; i < grid.n_x; ++i) u[shape.node(i, 0)] = u0(grid.x_at(i));

  u[shape.node(0, 1)] = 0.0;
  u[shape.node(grid.n_x - 1, 1)] = 0.0;
  for (int i = 1; i <= grid.n_x - 2; ++i) {
    const double lap =
        u[shape.node(i + 1, 0)] - 2.0 * u[shape.node(i, 0)] + u[shape.node(i - 1, 0)];
    u[shape.node(i, 1)] =
        u[shape.node(i, 0)] + grid.dt() * u0t(grid.x_at(i)) + 0.5 * c2 * lap;
  }

  for (int n = 1; n <= grid.n_t - 2; ++n) {
    u[shape.node(0, n + 1)] = 0.0;
    u[shape.node(grid.n_x - 1, n + 1)] = 0.0;
    for (int i = 1; i <= grid.n_x - 2; ++i) {
      const double lap =
          u[shape.node(i + 1, n)] - 2.0 * u[shape.node(i, n)] + u[shape.node(i - 1, n)];
      u[shape.node(i, n + 1)] =
          2.0 * u[shape.node(i, n)] - u[shape.node(i, n - 1)] + c2 * lap;
    }
  }
  return u;
}

TaggedSystem assemble_wave_case_study(const GridSpec& grid, const ParallelogramSpec& data,
                                      const std::optional<ReflectorSpec>& reflector,
                                      const ScalarField& u0, const ScalarField& u0t) {
  grid.validate();
  const GridShape shape = grid.shape();
  const Eigen::VectorXd reference = wave_reference_solution(grid, u0, u0t);

  std::vector<SparseRow> rows;
  std::vector<RowTag> tags;

  for (const auto& [i, n] : data.nodes(grid)) {
    RowBuilder b;
    b.add(shape.node(i, n), 1.0);
    b.rhs = reference[shape.node(i, n)];
    rows.push_back(b.finish());
    tags.push_back(RowTag{RowKind::DataConstraint, i, n});
  }

  if (reflector) {
    if (reflector->t_begin < 0 || reflector->t_end >= grid.n_t ||
        reflector->t_begin > reflector->t_end)
      throw InvalidArgument("ReflectorSpec: time range outside the grid");
    for (int n = reflector->t_begin; n <= reflector->t_end; ++n) {
      RowBuilder b;
      b.add(shape.node(0, n), 1.0);
      b.rhs = 0.0;
      rows.push_back(b.finish());
      tags.push_back(RowTag{RowKind::BoundaryCondition, 0, n});
    }
  }

  append_law_rows(grid, rows, tags);

  return TaggedSystem(grid.n_x * grid.n_t, std::move(rows), std::move(tags), shape);
}

int ode_node_count(int n) {
  if (n < 1) throw InvalidArgument("ODE grid: need at least one interior row");
  return n + 2;
}

double ode_dt(int n, double t_max) {
  if (!(t_max > 0)) throw InvalidArgument("ODE grid: t_max must be positive");
  return t_max / (n + 1);
}

int ode_snap_node(int n, double t_max, double t) {
  const double dt = ode_dt(n, t_max);
  const int j = static_cast<int>(std::llround(t / dt));
  return std::clamp(j, 0, n + 1);
}

namespace {

TaggedSystem assemble_second_order_ode(int n, double t_max,
                                       const std::vector<ConstraintPoint>& constraints,
                                       double omega, RowKind constraint_kind) {
  const int n_cols = ode_node_count(n);
  const double dt = ode_dt(n, t_max);
  const double react = omega * omega * dt * dt;  // 0 for the line ODE

  std::vector<SparseRow> rows;
  std::vector<RowTag> tags;
  rows.reserve(n + constraints.size());
  tags.reserve(rows.capacity());

  for (int j = 1; j <= n; ++j) {
    RowBuilder b;
    b.add(j - 1, 1.0);
    b.add(j, -2.0 + react);
    b.add(j + 1, 1.0);
    b.rhs = 0.0;
    rows.push_back(b.finish());
    tags.push_back(RowTag{RowKind::Law, -1, j});
  }

  for (const ConstraintPoint& cp : constraints) {
    const int j = ode_snap_node(n, t_max, cp.t);
    RowBuilder b;
    if (cp.kind == ConstraintKind::Value) {
      b.add(j, 1.0);
    } else {
      const int jj = std::min(j, n);  // forward difference needs j+1
      // (x_{j+1} - x_j)/dt plus the Taylor correction 0.5*omega^2*dt*x_j,
      // which keeps derivative constraints second-order consistent with the
      // stencil (it vanishes for the line ODE).
      b.add(jj, -1.0 / dt + 0.5 * omega * omega * dt);
      b.add(jj + 1, 1.0 / dt);
    }
    b.rhs = cp.value;
    rows.push_back(b.finish());
    tags.push_back(RowTag{constraint_kind, -1, j});
  }

  return TaggedSystem(n_cols, std::move(rows), std::move(tags));
}

}  // namespace

TaggedSystem assemble_line_ode(int n, const std::vector<ConstraintPoint>& constraints) {
  return assemble_second_order_ode(n, 1.0, constraints, 0.0,
                                   RowKind::BoundaryCondition);
}

TaggedSystem assemble_harmonic_oscillator(int n, double t_max,
                                          const std::vector<ConstraintPoint>& ics,
                                          double omega) {
  if (ics.size() > 2)
    throw InvalidArgument("assemble_harmonic_oscillator: at most two ICs");
  if (!(omega > 0)) throw InvalidArgument("assemble_harmonic_oscillator: omega > 0");
  return assemble_second_order_ode(n, t_max, ics, omega, RowKind::InitialCondition);
}

std::vector<ConstraintPoint> three_contradictory_constraints() {
  return {
      ConstraintPoint{ConstraintKind::Value, 0.0, 0.0},
      ConstraintPoint{ConstraintKind::Value, 1.0, 1.0},
      ConstraintPoint{ConstraintKind::Value, 0.5, 0.0},
  };
}

TwoLineFixture make_two_line_fixture(int n, int n1, int n2) {
  if (n1 < 2 || n2 < 2)
    throw InvalidArgument("make_two_line_fixture: need at least two rows per line");
  const double dt = ode_dt(n, 1.0);
  const auto line1_at = [](double t) { return 0.5 * t + 0.1; };
  const auto line2_at = [](double t) { return -0.8 * t + 0.9; };

  std::vector<ConstraintPoint> constraints;
  for (int k = 0; k < n1; ++k) {
    const double t = static_cast<double>(k) / (n1 - 1);
    const double t_snap = ode_snap_node(n, 1.0, t) * dt;
    constraints.push_back(ConstraintPoint{ConstraintKind::Value, t_snap, line1_at(t_snap)});
  }
  for (int k = 0; k < n2; ++k) {
    const double t = static_cast<double>(k) / (n2 - 1);
    const double t_snap = ode_snap_node(n, 1.0, t) * dt;
    constraints.push_back(ConstraintPoint{ConstraintKind::Value, t_snap, line2_at(t_snap)});
  }

  // The clusters are observations, not boundary data: retag the constraint
  // rows the line-ODE assembler produced.
  const TaggedSystem assembled = assemble_line_ode(n, constraints);
  std::vector<RowTag> tags = assembled.tags();
  for (RowTag& tag : tags)
    if (tag.kind != RowKind::Law) tag.kind = RowKind::DataConstraint;
  TwoLineFixture out{TaggedSystem(assembled.n_cols(), assembled.rows(), std::move(tags),
                                  assembled.grid_shape()),
                     Eigen::VectorXd(ode_node_count(n)),
                     Eigen::VectorXd(ode_node_count(n)),
                     {},
                     {}};
  for (int j = 0; j < ode_node_count(n); ++j) {
    out.line1[j] = line1_at(j * dt);
    out.line2[j] = line2_at(j * dt);
  }
  for (int k = 0; k < n1; ++k) out.line1_rows.push_back(n + k);
  for (int k = 0; k < n2; ++k) out.line2_rows.push_back(n + n1 + k);
  return out;
}

}  // namespace wellprobe
