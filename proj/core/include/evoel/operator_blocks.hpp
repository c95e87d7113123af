#pragma once

// Block-structured real matrices with labelled row/column spaces.
// Blocks up to kDenseLimit x kDenseLimit are held dense, larger ones as
// sparse triplet-assembled matrices. Absent blocks are zero.

#include "evoel/tensor_algebra.hpp"

#include <Eigen/Sparse>

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace evoel {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;
using Triplet = Eigen::Triplet<double, Index>;

struct Space {
  std::string label;
  Index dim = 0;

  bool operator==(const Space&) const = default;
};

inline constexpr Index kDenseLimit = 200;

class BlockOperator {
 public:
  using Block = std::variant<Matrix, SparseMatrix>;

  BlockOperator() = default;
  BlockOperator(std::vector<Space> row_spaces, std::vector<Space> col_spaces);

  /// Square operator on `spaces`.
  static BlockOperator square(std::vector<Space> spaces);
  /// Split an assembled matrix along the given spaces, dropping zero blocks.
  static BlockOperator from_dense(std::vector<Space> rows, std::vector<Space> cols, const Matrix& m);
  static BlockOperator from_sparse(std::vector<Space> rows, std::vector<Space> cols, const SparseMatrix& m);

  const std::vector<Space>& row_spaces() const { return rows_; }
  const std::vector<Space>& col_spaces() const { return cols_; }
  Index rows() const;
  Index cols() const;
  bool is_square() const { return rows() == cols(); }

  std::size_t row_index(const std::string& label) const;
  std::size_t col_index(const std::string& label) const;
  Index row_offset(std::size_t i) const;
  Index col_offset(std::size_t j) const;

  void set_block(const std::string& row, const std::string& col, Matrix m);
  void set_block(const std::string& row, const std::string& col, SparseMatrix m);
  void set_block(std::size_t i, std::size_t j, Block b);
  void clear_block(const std::string& row, const std::string& col);

  bool has_block(std::size_t i, std::size_t j) const;
  bool has_block(const std::string& row, const std::string& col) const;
  /// Dense copy of a block; zero if absent.
  Matrix dense_block(std::size_t i, std::size_t j) const;
  Matrix dense_block(const std::string& row, const std::string& col) const;
  SparseMatrix sparse_block(std::size_t i, std::size_t j) const;
  SparseMatrix sparse_block(const std::string& row, const std::string& col) const;
  const std::map<std::pair<std::size_t, std::size_t>, Block>& blocks() const { return blocks_; }

  Matrix to_dense() const;
  SparseMatrix to_sparse() const;

  BlockOperator transpose() const;
  BlockOperator scaled(double s) const;
  double max_abs() const;

  BlockOperator operator+(const BlockOperator& other) const;
  BlockOperator operator-(const BlockOperator& other) const;

 private:
  void check_shape(std::size_t i, std::size_t j, Index r, Index c) const;

  std::vector<Space> rows_;
  std::vector<Space> cols_;
  std::map<std::pair<std::size_t, std::size_t>, Block> blocks_;
};

/// Assembled matrix in label order (dense).
Matrix assemble(const BlockOperator& b);

enum class Verdict { pos, indef, marginal };

std::string_view to_string(Verdict v);

struct Classification {
  bool selfadjoint = false;
  bool skew = false;
  Verdict definiteness = Verdict::indef;
  bool positive_definite() const { return definiteness == Verdict::pos; }
  /// "selfadjoint", "skew", "zero" (both) or "neither".
  std::string symmetry() const;
};

/// Symmetry via ||M -+ M^T|| <= tol ||M|| and definiteness of the symmetric
/// part. Matrices up to kDenseLimit use eigenvalues; larger ones an LDL^T
/// factorization. Values within 1e-10 * max|M| of zero are marginal.
Classification classify(const BlockOperator& b, double tol = 1e-12);
Classification classify(const Matrix& m, double tol = 1e-12);
Classification classify(const SparseMatrix& m, double tol = 1e-12);

/// Three-valued definiteness of a symmetric dense matrix.
Verdict definiteness(const Matrix& symmetric, double band_factor = 1e-10);

/// C2 - E C0^{-1} E^* with C0 the (top, top) and C2 the (bottom, bottom) part.
Matrix schur_complement(const BlockOperator& b, const std::vector<std::string>& top,
                        const std::vector<std::string>& bottom);

/// Inverse of a 2x2 block operator via the Gauss-elimination formula
/// [[C0^-1 + C0^-1 E* S^-1 E C0^-1, -C0^-1 E* S^-1], [-S^-1 E C0^-1, S^-1]]
/// with S = C2 - E C0^-1 E*.
BlockOperator block_inverse_2x2(const BlockOperator& b);

/// S b S^T. S's column spaces must match b's row and column dimensions.
BlockOperator conjugate(const BlockOperator& b, const BlockOperator& s);

/// A block operator whose rows are orthonormal (S S^T = 1) or whose columns
/// are (S^T S = 1).
class Isometry {
 public:
  enum class Kind { coisometry, isometry, unitary };

  explicit Isometry(BlockOperator s, double tol = 1e-12);

  const BlockOperator& op() const { return s_; }
  Kind kind() const { return kind_; }

 private:
  BlockOperator s_;
  Kind kind_;
};

std::string to_json(const BlockOperator& b);
BlockOperator block_operator_from_json(const std::string& text);

/// Max |a - b| over assembled entries; shapes must agree.
double max_deviation(const BlockOperator& a, const BlockOperator& b);

/// Drops zero-dimensional spaces (and their blocks).
BlockOperator drop_empty_spaces(const BlockOperator& b);

/// Kronecker product I_count (x) m as a sparse matrix.
SparseMatrix kron_identity(Index count, const Matrix& m);

}  // namespace evoel
