#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wellprobe/errors.hpp"

namespace wellprobe {

/// Role a row plays in the discretized problem. Law rows encode the
/// differential operator; the other kinds are pointwise constraints.
enum class RowKind : std::uint8_t {
  Law = 0,
  InitialCondition = 1,
  BoundaryCondition = 2,
  DataConstraint = 3,
};

const char* row_kind_name(RowKind kind);

/// Per-row annotation. For rows tied to a grid node, (space, time) hold the
/// node indices of the stencil center / constrained node; -1 means "not
/// grid-addressed" (e.g. rows of a synthetic system).
struct RowTag {
  RowKind kind = RowKind::DataConstraint;
  int space = -1;
  int time = -1;
};

/// One sparse equation: sum_j coeffs[j] * x[cols[j]] = rhs.
/// Invariants (checked by TaggedSystem): cols strictly increasing, at least
/// one entry, no stored zero coefficients.
struct SparseRow {
  std::vector<int> cols;
  std::vector<double> coeffs;
  double rhs = 0.0;

  int nnz() const { return static_cast<int>(cols.size()); }

  /// <a_i, x> for a full-length vector x.
  double dot(const Eigen::VectorXd& x) const;

  /// ||a_i||^2 over the stored entries.
  double squared_norm() const;
};

/// Grid dimensions for systems assembled on a space-time lattice. Column c
/// corresponds to node (space, time) = (c % n_x, c / n_x).
struct GridShape {
  int n_x = 0;
  int n_t = 0;

  int node(int space, int time) const { return time * n_x + space; }
};

/// An immutable sparse linear system A x = b with one RowTag per row.
/// Construction validates the row invariants and compiles a CSR form used by
/// the iterative solvers; after that the object is read-only.
class TaggedSystem {
 public:
  TaggedSystem(int n_cols, std::vector<SparseRow> rows, std::vector<RowTag> tags,
               std::optional<GridShape> grid_shape = std::nullopt);

  int n_rows() const { return static_cast<int>(rows_.size()); }
  int n_cols() const { return n_cols_; }

  const SparseRow& row(int i) const { return rows_[i]; }
  const RowTag& tag(int i) const { return tags_[i]; }
  const std::vector<SparseRow>& rows() const { return rows_; }
  const std::vector<RowTag>& tags() const { return tags_; }
  const std::optional<GridShape>& grid_shape() const { return grid_shape_; }

  const Eigen::VectorXd& rhs() const { return rhs_; }
  double rhs_norm() const { return rhs_.norm(); }
  double frobenius_norm() const { return frobenius_norm_; }
  double row_squared_norm(int i) const { return row_sq_norms_[i]; }

  /// y = A x.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  /// z = A^T y.
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const;

  Eigen::MatrixXd to_dense() const;

  /// Row indices whose tag matches `kind`.
  std::vector<int> rows_of_kind(RowKind kind) const;
  int count_of_kind(RowKind kind) const;

  /// New system containing only the listed rows (same column space).
  TaggedSystem subsystem(const std::vector<int>& keep_rows) const;

  /// Convenience: the subsystem of all Law rows.
  TaggedSystem law_block() const;

  /// Content hash (FNV-1a over structure, coefficients, rhs and tags). Used
  /// to key the ensemble binary cache.
  std::uint64_t content_hash() const { return content_hash_; }

 private:
  int n_cols_;
  std::vector<SparseRow> rows_;
  std::vector<RowTag> tags_;
  std::optional<GridShape> grid_shape_;

  Eigen::VectorXd rhs_;
  std::vector<double> row_sq_norms_;
  double frobenius_norm_ = 0.0;
  std::uint64_t content_hash_ = 0;

  // CSR arrays for fast apply / apply_transpose.
  std::vector<int> csr_ptr_;
  std::vector<int> csr_col_;
  std::vector<double> csr_val_;
};

/// r = A x - b.
Eigen::VectorXd residual(const TaggedSystem& system, const Eigen::VectorXd& x);

/// ||A x - b||_2.
double residual_norm(const TaggedSystem& system, const Eigen::VectorXd& x);

/// Residual 2-norms split by row kind, in enum order
/// {Law, InitialCondition, BoundaryCondition, DataConstraint}.
struct ResidualBreakdown {
  double by_kind[4] = {0.0, 0.0, 0.0, 0.0};
  double total = 0.0;

  double law() const { return by_kind[0]; }
  /// 2-norm over all non-Law rows.
  double constraints() const;
};

ResidualBreakdown residual_breakdown(const TaggedSystem& system,
                                     const Eigen::VectorXd& x);

}  // namespace wellprobe
