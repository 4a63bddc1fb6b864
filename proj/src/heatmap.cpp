#include "wellprobe/heatmap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "wellprobe/errors.hpp"

namespace wellprobe {

namespace {

// Viridis control points; intermediate colors are linear in RGB.
constexpr int kStops = 5;
constexpr double kStopRgb[kStops][3] = {
    {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};

void colorize(double t, std::uint8_t* out) {
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  const double pos = t * (kStops - 1);
  int lo = static_cast<int>(pos);
  if (lo >= kStops - 1) lo = kStops - 2;
  const double frac = pos - lo;
  for (int c = 0; c < 3; ++c) {
    const double v = kStopRgb[lo][c] + frac * (kStopRgb[lo + 1][c] - kStopRgb[lo][c]);
    out[c] = static_cast<std::uint8_t>(std::lround(v));
  }
}

[[noreturn]] void throw_bad_entries(const char* what,
                                    const std::vector<std::pair<int, int>>& where,
                                    std::size_t total) {
  std::string msg = "render_heatmap: ";
  msg += what;
  msg += " at (row, col):";
  for (const auto& [r, c] : where)
    msg += " (" + std::to_string(r) + ", " + std::to_string(c) + ")";
  if (total > where.size())
    msg += " and " + std::to_string(total - where.size()) + " more";
  throw InvalidArgument(msg);
}

}  // namespace

Heatmap render_heatmap(const Eigen::MatrixXd& field, const HeatmapOptions& opts) {
  if (field.rows() == 0 || field.cols() == 0)
    throw InvalidArgument("render_heatmap: empty field");

  std::vector<std::pair<int, int>> bad;
  std::size_t bad_total = 0;
  for (int r = 0; r < field.rows(); ++r)
    for (int c = 0; c < field.cols(); ++c)
      if (!std::isfinite(field(r, c))) {
        ++bad_total;
        if (bad.size() < 8) bad.emplace_back(r, c);
      }
  if (bad_total > 0) throw_bad_entries("non-finite values", bad, bad_total);

  Eigen::MatrixXd values = field;
  if (opts.scale == HeatmapScale::Log) {
    double min_pos = std::numeric_limits<double>::infinity();
    for (int r = 0; r < values.rows(); ++r)
      for (int c = 0; c < values.cols(); ++c) {
        if (values(r, c) < 0) {
          ++bad_total;
          if (bad.size() < 8) bad.emplace_back(r, c);
        } else if (values(r, c) > 0 && values(r, c) < min_pos) {
          min_pos = values(r, c);
        }
      }
    if (bad_total > 0) throw_bad_entries("negative values on a log scale", bad, bad_total);
    if (std::isinf(min_pos)) min_pos = 1.0;  // all-zero field: constant image
    for (int r = 0; r < values.rows(); ++r)
      for (int c = 0; c < values.cols(); ++c)
        values(r, c) = std::log10(std::max(values(r, c), min_pos));
  }

  double lo = opts.vmin.value_or(values.minCoeff());
  double hi = opts.vmax.value_or(values.maxCoeff());
  if (!(lo <= hi)) throw InvalidArgument("render_heatmap: vmin > vmax");

  Heatmap map;
  map.height = static_cast<int>(field.rows());
  map.width = static_cast<int>(field.cols());
  map.rgb.resize(static_cast<std::size_t>(map.width) * map.height * 3);

  const double span = hi - lo;
  std::size_t at = 0;
  for (int r = 0; r < values.rows(); ++r)
    for (int c = 0; c < values.cols(); ++c) {
      const double t = span > 0 ? (values(r, c) - lo) / span : 0.5;
      colorize(t, &map.rgb[at]);
      at += 3;
    }
  return map;
}

std::vector<std::uint8_t> encode_ppm(const Heatmap& map) {
  char header[64];
  const int len =
      std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", map.width, map.height);
  std::vector<std::uint8_t> out(header, header + len);
  out.insert(out.end(), map.rgb.begin(), map.rgb.end());
  return out;
}

void write_heatmap_ppm(const std::string& path, const Eigen::MatrixXd& field,
                       const HeatmapOptions& opts) {
  const std::vector<std::uint8_t> bytes = encode_ppm(render_heatmap(field, opts));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_heatmap_ppm: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write_heatmap_ppm: short write to " + path);
}

Eigen::MatrixXd field_from_values(const GridShape& shape, const Eigen::VectorXd& values) {
  if (shape.n_x <= 0 || shape.n_t <= 0)
    throw InvalidArgument("field_from_values: empty grid shape");
  if (values.size() != static_cast<long>(shape.n_x) * shape.n_t)
    throw InvalidArgument("field_from_values: vector length does not match grid");
  Eigen::MatrixXd out(shape.n_t, shape.n_x);
  for (int t = 0; t < shape.n_t; ++t)
    for (int i = 0; i < shape.n_x; ++i) out(t, i) = values[shape.node(i, t)];
  return out;
}

}  // namespace wellprobe
