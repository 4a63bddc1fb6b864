#include "wellprobe/tagged_system.hpp"

#include <cmath>
#include <cstring>

#include "wellprobe/detail/fnv.hpp"

namespace wellprobe {

using detail::fnv_bytes;
using detail::fnv_value;
using detail::kFnvOffset;

const char* row_kind_name(RowKind kind) {
  switch (kind) {
    case RowKind::Law:
      return "law";
    case RowKind::InitialCondition:
      return "initial_condition";
    case RowKind::BoundaryCondition:
      return "boundary_condition";
    case RowKind::DataConstraint:
      return "data_constraint";
  }
  return "unknown";
}

double SparseRow::dot(const Eigen::VectorXd& x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < cols.size(); ++j) acc += coeffs[j] * x[cols[j]];
  return acc;
}

double SparseRow::squared_norm() const {
  double acc = 0.0;
  for (double c : coeffs) acc += c * c;
  return acc;
}

TaggedSystem::TaggedSystem(int n_cols, std::vector<SparseRow> rows,
                           std::vector<RowTag> tags,
                           std::optional<GridShape> grid_shape)
    : n_cols_(n_cols),
      rows_(std::move(rows)),
      tags_(std::move(tags)),
      grid_shape_(grid_shape) {
  if (n_cols_ <= 0) throw InvalidArgument("TaggedSystem: n_cols must be positive");
  if (rows_.size() != tags_.size())
    throw InvalidArgument("TaggedSystem: rows/tags size mismatch");
  if (grid_shape_) {
    if (grid_shape_->n_x <= 0 || grid_shape_->n_t <= 0)
      throw InvalidArgument("TaggedSystem: grid shape must be positive");
    if (static_cast<long long>(grid_shape_->n_x) * grid_shape_->n_t != n_cols_)
      throw InvalidArgument("TaggedSystem: grid shape does not match n_cols");
  }

  rhs_.resize(static_cast<int>(rows_.size()));
  row_sq_norms_.resize(rows_.size());

  std::size_t nnz_total = 0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const SparseRow& r = rows_[i];
    if (r.cols.empty())
      throw InvalidArgument("TaggedSystem: row " + std::to_string(i) + " is empty");
    if (r.cols.size() != r.coeffs.size())
      throw InvalidArgument("TaggedSystem: row " + std::to_string(i) +
                            " cols/coeffs size mismatch");
    for (std::size_t j = 0; j < r.cols.size(); ++j) {
      if (r.cols[j] < 0 || r.cols[j] >= n_cols_)
        throw InvalidArgument("TaggedSystem: column index out of range in row " +
                              std::to_string(i));
      if (j > 0 && r.cols[j] <= r.cols[j - 1])
        throw InvalidArgument(
            "TaggedSystem: column indices not strictly increasing in row " +
            std::to_string(i));
      if (r.coeffs[j] == 0.0)
        throw InvalidArgument("TaggedSystem: stored zero coefficient in row " +
                              std::to_string(i));
      if (!std::isfinite(r.coeffs[j]))
        throw InvalidArgument("TaggedSystem: non-finite coefficient in row " +
                              std::to_string(i));
    }
    if (!std::isfinite(r.rhs))
      throw InvalidArgument("TaggedSystem: non-finite rhs in row " +
                            std::to_string(i));
    rhs_[static_cast<int>(i)] = r.rhs;
    row_sq_norms_[i] = r.squared_norm();
    frobenius_norm_ += row_sq_norms_[i];
    nnz_total += r.cols.size();
  }
  frobenius_norm_ = std::sqrt(frobenius_norm_);

  csr_ptr_.reserve(rows_.size() + 1);
  csr_col_.reserve(nnz_total);
  csr_val_.reserve(nnz_total);
  csr_ptr_.push_back(0);
  for (const SparseRow& r : rows_) {
    csr_col_.insert(csr_col_.end(), r.cols.begin(), r.cols.end());
    csr_val_.insert(csr_val_.end(), r.coeffs.begin(), r.coeffs.end());
    csr_ptr_.push_back(static_cast<int>(csr_col_.size()));
  }

  std::uint64_t h = kFnvOffset;
  fnv_value(h, n_cols_);
  const int shape_nx = grid_shape_ ? grid_shape_->n_x : -1;
  const int shape_nt = grid_shape_ ? grid_shape_->n_t : -1;
  fnv_value(h, shape_nx);
  fnv_value(h, shape_nt);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const SparseRow& r = rows_[i];
    fnv_value(h, static_cast<std::uint32_t>(r.cols.size()));
    fnv_bytes(h, r.cols.data(), r.cols.size() * sizeof(int));
    fnv_bytes(h, r.coeffs.data(), r.coeffs.size() * sizeof(double));
    fnv_value(h, r.rhs);
    fnv_value(h, tags_[i].kind);
    fnv_value(h, tags_[i].space);
    fnv_value(h, tags_[i].time);
  }
  content_hash_ = h;
}

Eigen::VectorXd TaggedSystem::apply(const Eigen::VectorXd& x) const {
  if (x.size() != n_cols_)
    throw InvalidArgument("apply: vector length does not match n_cols");
  Eigen::VectorXd y(n_rows());
  for (int i = 0; i < n_rows(); ++i) {
    double acc = 0.0;
    for (int k = csr_ptr_[i]; k < csr_ptr_[i + 1]; ++k)
      acc += csr_val_[k] * x[csr_col_[k]];
    y[i] = acc;
  }
  return y;
}

Eigen::VectorXd TaggedSystem::apply_transpose(const Eigen::VectorXd& y) const {
  if (y.size() != n_rows())
    throw InvalidArgument("apply_transpose: vector length does not match n_rows");
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_cols_);
  for (int i = 0; i < n_rows(); ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (int k = csr_ptr_[i]; k < csr_ptr_[i + 1]; ++k)
      z[csr_col_[k]] += csr_val_[k] * yi;
  }
  return z;
}

Eigen::MatrixXd TaggedSystem::to_dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_rows(), n_cols_);
  for (int i = 0; i < n_rows(); ++i)
    for (int k = csr_ptr_[i]; k < csr_ptr_[i + 1]; ++k)
      a(i, csr_col_[k]) = csr_val_[k];
  return a;
}

std::vector<int> TaggedSystem::rows_of_kind(RowKind kind) const {
  std::vector<int> out;
  for (int i = 0; i < n_rows(); ++i)
    if (tags_[i].kind == kind) out.push_back(i);
  return out;
}

int TaggedSystem::count_of_kind(RowKind kind) const {
  int n = 0;
  for (const RowTag& t : tags_)
    if (t.kind == kind) ++n;
  return n;
}

TaggedSystem TaggedSystem::subsystem(const std::vector<int>& keep_rows) const {
  std::vector<SparseRow> rows;
  std::vector<RowTag> tags;
  rows.reserve(keep_rows.size());
  tags.reserve(keep_rows.size());
  for (int i : keep_rows) {
    if (i < 0 || i >= n_rows())
      throw InvalidArgument("subsystem: row index out of range");
    rows.push_back(rows_[i]);
    tags.push_back(tags_[i]);
  }
  return TaggedSystem(n_cols_, std::move(rows), std::move(tags), grid_shape_);
}

TaggedSystem TaggedSystem::law_block() const {
  return subsystem(rows_of_kind(RowKind::Law));
}

Eigen::VectorXd residual(const TaggedSystem& system, const Eigen::VectorXd& x) {
  return system.apply(x) - system.rhs();
}

double residual_norm(const TaggedSystem& system, const Eigen::VectorXd& x) {
  return residual(system, x).norm();
}

double ResidualBreakdown::constraints() const {
  double acc = 0.0;
  for (int k = 1; k < 4; ++k) acc += by_kind[k] * by_kind[k];
  return std::sqrt(acc);
}

ResidualBreakdown residual_breakdown(const TaggedSystem& system,
                                     const Eigen::VectorXd& x) {
  const Eigen::VectorXd r = residual(system, x);
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < system.n_rows(); ++i) {
    const int k = static_cast<int>(system.tag(i).kind);
    acc[k] += r[i] * r[i];
  }
  ResidualBreakdown out;
  for (int k = 0; k < 4; ++k) out.by_kind[k] = std::sqrt(acc[k]);
  out.total = r.norm();
  return out;
}

}  // namespace wellprobe
