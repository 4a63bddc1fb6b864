#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wellprobe/tagged_system.hpp"

namespace wellprobe {

enum class HeatmapScale : std::uint8_t {
  Linear = 0,
  /// log10 of the values. Requires a non-negative field; zeros are clamped to
  /// the smallest strictly positive entry.
  Log = 1,
};

struct HeatmapOptions {
  HeatmapScale scale = HeatmapScale::Linear;
  /// Explicit color range (applied after the log transform when scale = Log).
  /// Unset means the data range.
  std::optional<double> vmin;
  std::optional<double> vmax;
};

/// Rendered RGB buffer, 3 bytes per pixel, row-major, row 0 at the top.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Map a field to colors. Image row r = matrix row r, so for grid fields
/// (see field_from_values) the top row is time index 0. A constant field
/// renders as the colormap midpoint. Non-finite entries are an error that
/// names the offending indices.
Heatmap render_heatmap(const Eigen::MatrixXd& field,
                       const HeatmapOptions& opts = HeatmapOptions{});

/// Binary PPM (P6). Byte-for-byte deterministic for a given field + options.
std::vector<std::uint8_t> encode_ppm(const Heatmap& map);

void write_heatmap_ppm(const std::string& path, const Eigen::MatrixXd& field,
                       const HeatmapOptions& opts = HeatmapOptions{});

/// Reshape a flat solution/statistic vector onto its grid: out(t, i) =
/// values[t * n_x + i], so rows are time slices.
Eigen::MatrixXd field_from_values(const GridShape& shape,
                                  const Eigen::VectorXd& values);

}  // namespace wellprobe
