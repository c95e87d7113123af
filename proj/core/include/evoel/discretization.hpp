#pragma once

// Uniform Cartesian grid of n^3 interior nodes with spacing h and a zero
// ghost layer (homogeneous Dirichlet). Nodes are numbered
// (i0 * n + i1) * n + i2 with i0 along x1; node (i0,i1,i2) sits at
// ((i0+1) h, (i1+1) h, (i2+1) h). Grid vectors are node-major, slot-minor.
//
// The gradient is a forward difference that adds a new first slot: for an
// order-q field the entry d * 3^q + c of the result at node p is
// (u_c(p + e_d) - u_c(p)) / h. The divergence is defined as -G^T.

#include "evoel/material_laws.hpp"
#include "evoel/operator_blocks.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace evoel {

class Grid {
 public:
  Grid(Index n, double h);

  Index n() const { return n_; }
  double h() const { return h_; }
  Index nodes() const { return n_ * n_ * n_; }
  Index node(Index i0, Index i1, Index i2) const { return (i0 * n_ + i1) * n_ + i2; }
  std::array<Index, 3> indices(Index node) const;
  std::array<double, 3> position(Index node) const;
  /// Side length of the box, (n + 1) h.
  double extent() const { return static_cast<double>(n_ + 1) * h_; }

  bool operator==(const Grid&) const = default;

 private:
  Index n_;
  double h_;
};

class TensorField {
 public:
  TensorField(Grid grid, int order, tensor::Subspace subspace, Vector values);
  static TensorField zero(Grid grid, int order, tensor::Subspace subspace = tensor::Subspace::full);
  /// Samples full-tensor values (3^q entries per node) and projects them
  /// onto the subspace coordinates.
  static TensorField sample(Grid grid, int order, tensor::Subspace subspace,
                            const std::function<Vector(const std::array<double, 3>&)>& f);

  const Grid& grid() const { return grid_; }
  int order() const { return order_; }
  tensor::Subspace subspace() const { return subspace_; }
  Index node_dim() const { return tensor::subspace_dim(order_, subspace_); }
  const Vector& values() const { return values_; }
  /// Coefficients of one node in the subspace basis.
  Vector node_values(Index node) const { return values_.segment(node * node_dim(), node_dim()); }
  /// Full order-q tensor at a node.
  tensor::TensorValue at(Index node) const;

 private:
  Grid grid_;
  int order_;
  tensor::Subspace subspace_;
  Vector values_;
};

/// Order q -> order q+1, q in {0,1,2}.
SparseMatrix grad_matrix(const Grid& grid, int order);
/// Order q -> order q-1, q in {1,2,3}; exactly -grad_matrix(q-1)^T.
SparseMatrix div_matrix(const Grid& grid, int order);

/// Block-diagonal replication of a per-node map over all nodes.
SparseMatrix lift_pointwise(const Matrix& node_map, const Grid& grid);
/// Per-node coefficients given as a function of the node index.
SparseMatrix lift_pointwise(const std::function<Matrix(Index)>& node_map, Index rows, Index cols, const Grid& grid);
/// Lifts every block of a per-node operator.
BlockOperator lift_pointwise(const BlockOperator& node_op, const Grid& grid);

/// A pair -grad (flux <- kinetic) / -div (kinetic <- flux) in A.
struct GradientCoupling {
  std::string flux;
  std::string kinetic;
};

/// A_{flux,kinetic} = -E_flux^T G E_kinetic and A_{kinetic,flux} its negative
/// transpose, so A + A^T = 0 exactly.
BlockOperator assemble_A(const StateLayout& layout, const std::vector<GradientCoupling>& couplings, const Grid& grid);

/// Throws ShapeError unless every nonzero block of `a` has a partner block
/// equal to its negative transpose.
void check_grad_div_pairs(const BlockOperator& a);

/// Node-major, slot-minor snapshot of a block-major grid state.
void write_snapshot_csv(const std::string& path, const StateLayout& layout, const Grid& grid, const Vector& state);
void write_snapshot_binary(const std::string& path, const StateLayout& layout, const Grid& grid, const Vector& state);
/// JSON description of the snapshot layout.
std::string snapshot_sidecar(const StateLayout& layout, const Grid& grid, double time);

}  // namespace evoel
