#include "wellprobe/dimension.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace wellprobe {

PatchCloud extract_patch(const GridSpec& grid, const SolutionEnsemble& ensemble,
                         const PatchSpec& patch, bool include_nonfeasible) {
  grid.validate();
  if (!(patch.r > 0)) throw InvalidArgument("extract_patch: radius must be positive");
  if (ensemble.n_cols != grid.n_x * grid.n_t)
    throw InvalidArgument("extract_patch: ensemble does not match the grid");

  PatchCloud cloud;
  const GridShape shape = grid.shape();
  for (int n = 0; n < grid.n_t; ++n)
    for (int i = 0; i < grid.n_x; ++i)
      if (patch.contains(grid.x_at(i), grid.t_at(n))) cloud.nodes.emplace_back(i, n);
  if (cloud.nodes.empty())
    throw InvalidArgument("extract_patch: patch contains no grid node");

  std::vector<const Solution*> included;
  for (const Solution& s : ensemble.runs)
    if (include_nonfeasible || s.feasible()) included.push_back(&s);
  if (included.empty())
    throw InvalidArgument("extract_patch: no runs to include");

  cloud.points.resize(static_cast<int>(included.size()), cloud.n_nodes());
  for (int k = 0; k < static_cast<int>(included.size()); ++k)
    for (int j = 0; j < cloud.n_nodes(); ++j)
      cloud.points(k, j) =
          included[k]->values[shape.node(cloud.nodes[j].first, cloud.nodes[j].second)];
  return cloud;
}

int effective_dimension(const Eigen::MatrixXd& points, double tau_rel,
                        double sigma_floor) {
  if (points.rows() < 1 || points.cols() < 1)
    throw InvalidArgument("effective_dimension: empty cloud");
  if (!(tau_rel > 0) || tau_rel >= 1)
    throw InvalidArgument("effective_dimension: tau_rel must be in (0, 1)");

  Eigen::MatrixXd centered = points;
  const Eigen::RowVectorXd mean = points.colwise().mean();
  centered.rowwise() -= mean;

  const Eigen::VectorXd sv =
      Eigen::BDCSVD<Eigen::MatrixXd>(centered).singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;

  const double cutoff = std::max(tau_rel * sv[0], sigma_floor);
  int dim = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++dim;
  return dim;
}

int effective_dimension(const SolutionEnsemble& ensemble, double tau_rel,
                        bool include_nonfeasible) {
  std::vector<const Solution*> included;
  for (const Solution& s : ensemble.runs)
    if (include_nonfeasible || s.feasible()) included.push_back(&s);
  if (included.empty())
    throw InvalidArgument("effective_dimension: no runs to include");
  Eigen::MatrixXd points(static_cast<int>(included.size()), ensemble.n_cols);
  for (int k = 0; k < static_cast<int>(included.size()); ++k)
    points.row(k) = included[k]->values.transpose();
  return effective_dimension(points, tau_rel);
}

ScalingFit perimeter_scaling(const GridSpec& grid, const SolutionEnsemble& ensemble,
                             double x_center, double t_center,
                             const std::vector<double>& radii, double tau_rel,
                             double noise_floor_rel) {
  if (radii.size() < 2)
    throw InvalidArgument("perimeter_scaling: need at least two radii");

  ScalingFit fit;
  for (double r : radii) {
    PatchSpec patch{x_center, t_center, r};
    const PatchCloud cloud = extract_patch(grid, ensemble, patch);
    const double floor = noise_floor_rel * cloud.points.norm();
    ScalingSample s;
    s.r = r;
    s.perimeter = patch.perimeter();
    s.n_nodes = cloud.n_nodes();
    s.dimension = effective_dimension(cloud.points, tau_rel, floor);
    fit.samples.push_back(s);
  }

  double sp = 0, sd = 0, spp = 0, spd = 0;
  for (const ScalingSample& s : fit.samples) {
    sp += s.perimeter;
    sd += s.dimension;
    spp += s.perimeter * s.perimeter;
    spd += s.perimeter * s.dimension;
  }
  const double m = static_cast<double>(fit.samples.size());
  const double det = m * spp - sp * sp;
  if (det <= 0)
    throw InvalidArgument("perimeter_scaling: radii must not be all equal");
  fit.slope = (m * spd - sp * sd) / det;
  fit.intercept = (sd - fit.slope * sp) / m;
  return fit;
}

namespace {

// Characteristic lines at Courant 1 in index space. A "plus" line keeps
// i - n constant, a "minus" line keeps i + n constant. Prescription statuses
// are memoized; kInProgress breaks the reflection cycle plus <-> minus at
// the same boundary node.
class OracleTracer {
 public:
  OracleTracer(const GridSpec& grid, const ParallelogramSpec& data,
               const std::optional<ReflectorSpec>& reflector, int min_nodes)
      : grid_(grid), data_(data), reflector_(reflector), min_nodes_(min_nodes) {
    plus_status_.assign(grid.n_x + grid.n_t - 1, kUnknown);
    minus_status_.assign(grid.n_x + grid.n_t - 1, kUnknown);
  }

  bool plus_prescribed(int a) { return resolve(true, a); }
  bool minus_prescribed(int s) { return resolve(false, s); }

 private:
  static constexpr signed char kUnknown = -1;
  static constexpr signed char kInProgress = -2;

  int plus_index(int a) const { return a + grid_.n_t - 1; }

  int count_data_plus(int a) const {
    int count = 0;
    for (int n = std::max(0, -a); n < grid_.n_t && a + n < grid_.n_x; ++n)
      if (data_.contains(a + n, n)) ++count;
    return count;
  }

  int count_data_minus(int s) const {
    int count = 0;
    for (int n = std::max(0, s - grid_.n_x + 1); n < grid_.n_t && s - n >= 0; ++n)
      if (data_.contains(s - n, n)) ++count;
    return count;
  }

  bool resolve(bool plus, int key) {
    std::vector<signed char>& memo = plus ? plus_status_ : minus_status_;
    const int idx = plus ? plus_index(key) : key;
    if (idx < 0 || idx >= static_cast<int>(memo.size())) return false;
    if (memo[idx] == kInProgress) return false;
    if (memo[idx] != kUnknown) return memo[idx] != 0;

    memo[idx] = kInProgress;
    bool prescribed =
        (plus ? count_data_plus(key) : count_data_minus(key)) >= min_nodes_;
    if (!prescribed && reflector_) {
      // A plus line i - n = a meets x = x_min at n = -a, where it mirrors
      // into the minus line i + n = -a; a minus line i + n = s meets it at
      // n = s, mirroring into the plus line i - n = -s.
      const int n_hit = plus ? -key : key;
      if (n_hit >= 0 && n_hit < grid_.n_t && reflector_->covers(n_hit))
        prescribed = resolve(!plus, -key);
    }
    memo[idx] = prescribed ? 1 : 0;
    return prescribed;
  }

  const GridSpec& grid_;
  const ParallelogramSpec& data_;
  const std::optional<ReflectorSpec>& reflector_;
  int min_nodes_;
  std::vector<signed char> plus_status_;
  std::vector<signed char> minus_status_;
};

}  // namespace

std::vector<NodeClass> determined_region_oracle(
    const GridSpec& grid, const ParallelogramSpec& data,
    const std::optional<ReflectorSpec>& reflector, int min_nodes) {
  grid.validate();
  if (std::abs(grid.courant() - 1.0) > 1e-9)
    throw UnsupportedConfiguration(
        "determined_region_oracle: characteristics align with the lattice only "
        "at Courant number 1 (got " +
        std::to_string(grid.courant()) + ")");
  if (min_nodes < 1)
    throw InvalidArgument("determined_region_oracle: min_nodes must be >= 1");
  data.nodes(grid);  // validates the parallelogram against the grid

  OracleTracer tracer(grid, data, reflector, min_nodes);
  std::vector<NodeClass> classes(static_cast<std::size_t>(grid.n_x) * grid.n_t);
  for (int n = 0; n < grid.n_t; ++n) {
    for (int i = 0; i < grid.n_x; ++i) {
      const std::size_t node = static_cast<std::size_t>(n) * grid.n_x + i;
      if (data.contains(i, n) || (reflector && i == 0 && reflector->covers(n))) {
        classes[node] = NodeClass::Determined;  // pinned by its own row
        continue;
      }
      const int hits = (tracer.plus_prescribed(i - n) ? 1 : 0) +
                       (tracer.minus_prescribed(i + n) ? 1 : 0);
      classes[node] = hits == 2   ? NodeClass::Determined
                      : hits == 1 ? NodeClass::OneCharacteristic
                                  : NodeClass::Unconstrained;
    }
  }
  return classes;
}

}  // namespace wellprobe
