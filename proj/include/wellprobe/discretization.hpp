#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "wellprobe/tagged_system.hpp"

namespace wellprobe {

/// Space-time grid for the 1-D wave problems. Node (i, n) sits at
/// (x_min + i*dx, n*dt) and maps to column n*n_x + i.
struct GridSpec {
  int n_x = 30;
  int n_t = 60;
  double x_min = 0.0;
  double x_max = 1.0;
  double t_max = 0.0;
  double c = 1.0;

  double dx() const { return (x_max - x_min) / (n_x - 1); }
  double dt() const { return t_max / (n_t - 1); }
  /// Courant number c*dt/dx; assembly requires <= 1.
  double courant() const { return c * dt() / dx(); }
  double x_at(int i) const { return x_min + i * dx(); }
  double t_at(int n) const { return n * dt(); }
  GridShape shape() const { return GridShape{n_x, n_t}; }

  /// Grid with t_max chosen so the Courant number is exactly 1, which is the
  /// regime where discrete characteristics line up with the lattice diagonals.
  static GridSpec unit_courant(int n_x, int n_t, double c = 1.0);

  void validate() const;
};

using ScalarField = std::function<double(double)>;

/// Default initial displacement (identically zero).
double default_u0(double x);
/// Default initial velocity sin(2 pi x / c).
double default_u0t(double x, double c);

/// Parallelogram-shaped set of data nodes: for each time index
/// n in [t_lo, t_hi], the space indices [x_anchor + slant*(n - t_lo),
/// x_anchor + slant*(n - t_lo) + width - 1].
struct ParallelogramSpec {
  int t_lo = 2;
  int t_hi = 20;
  int x_anchor = 2;
  int slant = 1;  // -1, 0 or +1
  int width = 10;

  /// Default used by the wave case studies: slant +1, anchored on early time
  /// rows, extending to n_t/3, width about a third of the spatial extent.
  static ParallelogramSpec default_for(const GridSpec& grid);

  /// Enclosed (space, time) node pairs, time-major. Throws if any node falls
  /// outside the grid.
  std::vector<std::pair<int, int>> nodes(const GridSpec& grid) const;

  bool contains(int space, int time) const;
};

/// Homogeneous Dirichlet rows on the left boundary (x = x_min) for time
/// indices [t_begin, t_end], inclusive.
struct ReflectorSpec {
  int t_begin = 30;
  int t_end = 59;

  /// Default: the upper half of the time axis, n_t/2 rows.
  static ReflectorSpec default_for(const GridSpec& grid);

  int row_count() const { return t_end - t_begin + 1; }
  bool covers(int time) const { return time >= t_begin && time <= t_end; }
};

/// Fully constrained wave system: value ICs on the whole initial row,
/// derivative ICs on the interior of the initial row (ghost-node
/// elimination), homogeneous Dirichlet rows on both boundaries for every
/// later time level, and the centered-time centered-space law on the
/// interior. Row count identity: n_x + (n_x-2) + 2(n_t-1) + (n_x-2)(n_t-2)
/// = n_x * n_t, i.e. the system is square.
TaggedSystem assemble_wave_wellposed(const GridSpec& grid,
                                     const ScalarField& u0 = {},
                                     const ScalarField& u0t = {});

/// Underconstrained probe: DataConstraint rows on the parallelogram nodes
/// (values sampled from the well-posed solution), optional reflector rows,
/// and the law rows. No ICs, no right-boundary rows.
TaggedSystem assemble_wave_case_study(const GridSpec& grid,
                                      const ParallelogramSpec& data,
                                      const std::optional<ReflectorSpec>& reflector,
                                      const ScalarField& u0 = {},
                                      const ScalarField& u0t = {});

/// The unique solution of the fully constrained problem, computed by explicit
/// CTCS time marching (ghost-node start). This is what the case studies
/// sample their data from and what ensemble error-of-mean is measured
/// against.
Eigen::VectorXd wave_reference_solution(const GridSpec& grid,
                                        const ScalarField& u0 = {},
                                        const ScalarField& u0t = {});

/// Pointwise ODE constraint. `t` snaps to the nearest grid node.
enum class ConstraintKind : std::uint8_t { Value = 0, FirstDerivative = 1 };

struct ConstraintPoint {
  ConstraintKind kind = ConstraintKind::Value;
  double t = 0.0;
  double value = 0.0;
};

/// y'' = 0 on [0,1] with n interior stencil rows (nodes 0..n+1, dt = 1/(n+1)).
/// Value constraints pin the nearest node; first-derivative constraints use a
/// two-point forward difference (exact for lines). Constraint rows are tagged
/// BoundaryCondition.
TaggedSystem assemble_line_ode(int n, const std::vector<ConstraintPoint>& constraints);

/// x'' = -omega^2 x on [0, t_max] with n interior stencil rows. Initial
/// conditions (0 to 2 of them) are tagged InitialCondition; the
/// first-derivative row carries the Taylor correction 0.5*omega^2*dt*x_j so
/// that the full-rank solve stays second-order accurate.
TaggedSystem assemble_harmonic_oscillator(int n, double t_max,
                                          const std::vector<ConstraintPoint>& ics,
                                          double omega = 1.0);

/// Nodes of the 1-D ODE grids (shared by both assemblers): n+2 nodes, node j
/// at j * (t_max / (n+1)).
int ode_node_count(int n);
double ode_dt(int n, double t_max);
int ode_snap_node(int n, double t_max, double t);

/// Three mutually contradictory line constraints y(0)=0, y(1)=1, y(0.5)=0.
/// No line satisfies all three; dropping any single one leaves a consistent
/// system.
std::vector<ConstraintPoint> three_contradictory_constraints();

/// Two clusters of value constraints sampled exactly from two lines,
/// 0.5*t + 0.1 (n1 rows, the majority) and -0.8*t + 0.9 (n2 rows), at
/// equispaced times on [0,1] snapped to grid nodes. The exact per-node line
/// vectors are returned for error traces.
struct TwoLineFixture {
  TaggedSystem system;
  Eigen::VectorXd line1;
  Eigen::VectorXd line2;
  std::vector<int> line1_rows;
  std::vector<int> line2_rows;
};

TwoLineFixture make_two_line_fixture(int n = 39, int n1 = 10, int n2 = 5);

}  // namespace wellprobe
