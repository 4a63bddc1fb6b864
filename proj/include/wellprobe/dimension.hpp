#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "wellprobe/discretization.hpp"
#include "wellprobe/ensemble.hpp"

namespace wellprobe {

/// Rhombic patch in physical (x, t) coordinates: the four strict inequalities
///   t < x - (x* - R) + t*        t > (x* - R) - x + t*
///   t > x - (x* + R) + t*        t < (x* + R) - x + t*
/// with R = sqrt(2 r^2). Equivalently |(x-t) - (x*-t*)| < R and
/// |(x+t) - (x*+t*)| < R: a square of side 2R in characteristic coordinates.
/// Its perimeter in the (x, t) plane is p = 8r.
struct PatchSpec {
  double x_center = 0.0;
  double t_center = 0.0;
  double r = 0.0;

  double R() const { return std::sqrt(2.0) * r; }
  double perimeter() const { return 8.0 * r; }

  bool contains(double x, double t) const {
    const double rot = R();
    return (t < x - (x_center - rot) + t_center) &&
           (t > (x_center - rot) - x + t_center) &&
           (t > x - (x_center + rot) + t_center) &&
           (t < (x_center + rot) - x + t_center);
  }
};

/// Ensemble restricted to the nodes of one patch. Feature order is
/// (time index, space index) lexicographic; one row per included run.
struct PatchCloud {
  std::vector<std::pair<int, int>> nodes;  // (space, time)
  Eigen::MatrixXd points;                  // runs x nodes.size()

  int n_nodes() const { return static_cast<int>(nodes.size()); }
};

/// Gather the patch features from every feasible run (all runs if
/// include_nonfeasible). Throws InvalidArgument if the patch contains no grid
/// node.
PatchCloud extract_patch(const GridSpec& grid, const SolutionEnsemble& ensemble,
                         const PatchSpec& patch, bool include_nonfeasible = false);

/// PCA dimension of a point cloud: number of singular values of the
/// row-centered data matrix strictly above tau_rel times the largest one
/// (and above the absolute sigma_floor, which callers use to keep
/// solver-noise clouds from registering as structure). An all-identical
/// cloud has dimension 0.
int effective_dimension(const Eigen::MatrixXd& points, double tau_rel = 1e-3,
                        double sigma_floor = 0.0);

/// Same, treating each full solution vector as one point.
int effective_dimension(const SolutionEnsemble& ensemble, double tau_rel = 1e-3,
                        bool include_nonfeasible = false);

struct ScalingSample {
  double r = 0.0;
  double perimeter = 0.0;
  int n_nodes = 0;
  int dimension = 0;
};

struct ScalingFit {
  std::vector<ScalingSample> samples;
  double slope = 0.0;
  double intercept = 0.0;
};

/// Effective dimension of patches of growing radius around one center, with
/// a least-squares line d ~ slope * p + intercept through the (p, d)
/// samples. Radii and the fitted slope are in the same (physical) units as
/// the grid. noise_floor_rel scales the absolute singular-value floor by the
/// Frobenius norm of each (uncentered) patch cloud.
ScalingFit perimeter_scaling(const GridSpec& grid, const SolutionEnsemble& ensemble,
                             double x_center, double t_center,
                             const std::vector<double>& radii, double tau_rel = 1e-3,
                             double noise_floor_rel = 1e-7);

enum class NodeClass : std::uint8_t {
  Unconstrained = 0,
  OneCharacteristic = 1,
  Determined = 2,
};

/// Characteristic-tracing prediction of which nodes a case-study system
/// pins down. Only valid at Courant number 1, where characteristics are the
/// lattice diagonals: a characteristic line is "prescribed" when it passes
/// through at least min_nodes data nodes, or when it reaches a
/// reflector-covered boundary node and its mirror characteristic is
/// prescribed. A node is Determined when both its characteristics are
/// prescribed (data and reflector nodes themselves are pinned directly),
/// OneCharacteristic when exactly one is.
std::vector<NodeClass> determined_region_oracle(
    const GridSpec& grid, const ParallelogramSpec& data,
    const std::optional<ReflectorSpec>& reflector, int min_nodes = 2);

}  // namespace wellprobe
