#pragma once

// Mother/descendant reductions: block-diagonal maps S acting on a state
// layout, conjugation M_i -> S M_i S^T, the child gradient operator, and
// consistency checks between mother and child dynamics.
//
// In finite dimensions every closure question is void; what remains are
// matrix identities, which is all this module checks.

#include "evoel/evolution.hpp"
#include "evoel/material_laws.hpp"
#include "evoel/operator_blocks.hpp"

#include <optional>
#include <string>
#include <vector>

namespace evoel {

/// Per-node action of S on one block. `node` is target_dim x source_dim.
struct BlockAction {
  std::string name;
  Matrix node;
  BlockSpec target;  // subspace zero for an annihilated block (tombstone)

  static BlockAction identity(const BlockSpec& source);
  /// embedding(order, s)^T; for order 3 the subspace acts on the last two slots.
  static BlockAction restrict(const BlockSpec& source, tensor::Subspace s);
  static BlockAction annihilate(const BlockSpec& source);
  /// Order 1 -> order 2 skew via (1/sqrt 2) iota_skew^T Lambda, order 2 ->
  /// order 3 (1 (x) skew) via 1 (x) that map.
  static BlockAction lambda_unitary(const BlockSpec& source);
  static BlockAction user(const BlockSpec& source, Matrix node, BlockSpec target, std::string name = "user");

  /// Same action with the target block renamed.
  BlockAction as(const std::string& label) const;
  bool annihilates() const { return target.node_dim() == 0; }
};

/// Parses "identity", "annihilate", "lambda_unitary" or "restrict:<subspace>".
BlockAction block_action_from_string(const BlockSpec& source, const std::string& name);

class ReductionMap {
 public:
  enum class Kind { relative, descendant };

  /// One action per source block, in layout order. Throws ShapeError unless
  /// every action has orthonormal rows to 1e-12.
  ReductionMap(StateLayout source, std::vector<BlockAction> actions);

  const StateLayout& source() const { return source_; }
  /// Child layout; annihilated blocks stay as zero-dimensional tombstones.
  const StateLayout& target() const { return target_; }
  const std::vector<BlockAction>& actions() const { return actions_; }
  Kind kind() const { return kind_; }
  std::vector<std::string> annihilated() const;

  /// Block-diagonal per-node S (child spaces x source spaces).
  BlockOperator node_matrix() const;
  /// S lifted to a block-major grid state with `nodes` nodes.
  BlockOperator grid_matrix(Index nodes) const;

 private:
  StateLayout source_;
  StateLayout target_;
  std::vector<BlockAction> actions_;
  Kind kind_;
};

std::string_view to_string(ReductionMap::Kind k);

struct DescendantProblem {
  EvoProblem mother;
  ReductionMap map;
  EvoProblem child;
  BlockOperator s;  // grid-level S
  Validity child_validity;
};

/// Child with M_{i,S} = S M_i S^T and A_S built blockwise from
/// L = S_flux A_{flux,kinetic} S_kinetic^T and its negative transpose, so the
/// child A is exactly skew. The child forcing is S f.
DescendantProblem conjugate_problem(const EvoProblem& mother, const ReductionMap& map);
/// Per-node conjugation of a material law onto the child layout.
MaterialLaw conjugate_law(const MaterialLaw& law, const ReductionMap& map);

/// (A B^T)^T == B A^T up to tol relative to the entry scale.
bool check_compatibility(const Matrix& a, const Matrix& b, double tol = 1e-13);
bool check_compatibility(const SparseMatrix& a, const SparseMatrix& b, double tol = 1e-13);
bool check_compatibility(const BlockOperator& a, const BlockOperator& b, double tol = 1e-13);

struct DegenerateReduction {
  Matrix iota;  // orthonormal basis of ran N0, n x rank
  Index rank = 0;
  Matrix m0;    // (iota^T N0 iota)^{-1}
  Matrix m1;    // iota^T M1 iota
  Matrix a;     // iota^T A iota
  bool a_skew = false;
};

/// Singular values of N0 below rank_tol * sigma_max count as zero; those in
/// (rank_tol, marginal_tol] * sigma_max make N0 near-singular on its range
/// and are rejected. Throws PreconditionError if N0 is not symmetric PSD.
DegenerateReduction degenerate_reduce(const Matrix& n0, const Matrix& m1, const Matrix& a, double rank_tol = 1e-10,
                                      double marginal_tol = 1e-8);
DegenerateReduction degenerate_reduce(const Matrix& n0, const BlockOperator& m1, const BlockOperator& a,
                                      double rank_tol = 1e-10, double marginal_tol = 1e-8);

struct DynamicsReport {
  double discrepancy = 0.0;          // max_k |S U_mother,k - U_child,k| / max_k |U_child,k|
  double child_peak = 0.0;           // max_k |U_child,k|
  double coefficient_coupling = 0.0; // max_i |S M_i (1 - S^T S)| relative to |M_i|
  double a_invariance_defect = 0.0;  // |(1 - S^T S) A S^T S| / |A|
  Index steps = 0;
};

/// Runs the mother with forcing S^T f_child and the child with f_child.
/// Throws PreconditionError if some M_i couples ran(S^T) to ker(S). The
/// gradient operator is not required to preserve ran(S^T); its defect is
/// reported instead.
DynamicsReport verify_descendant_dynamics(const DescendantProblem& d, const Forcing& f_child, double dt,
                                          Scheme scheme = Scheme::midpoint, double coupling_tol = 1e-12);

/// JSON {identity_checks, classification, dynamics_discrepancy}.
std::string reduction_report_json(const DescendantProblem& d, const std::vector<std::pair<std::string, double>>& identity_checks,
                                  const std::optional<DynamicsReport>& dynamics);

}  // namespace evoel
