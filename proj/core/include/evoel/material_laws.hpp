#pragma once

// Material-law triples (M0, M1, M2) over a labelled per-node state layout,
// isotropic constructors and the positivity checks for them.

#include "evoel/operator_blocks.hpp"
#include "evoel/tensor_algebra.hpp"

#include <string>
#include <vector>

namespace evoel {

/// Kinetic blocks are differentiated by A (the "from" side of a gradient
/// coupling), flux blocks receive the gradient.
enum class Role { kinetic, flux };

struct BlockSpec {
  std::string label;
  int order = 0;
  tensor::Subspace subspace = tensor::Subspace::full;
  Role role = Role::flux;

  Index node_dim() const { return tensor::subspace_dim(order, subspace); }
  /// Embedding of this block's coefficients into full order-q tensors.
  Matrix embedding() const { return tensor::embedding(order, subspace); }
};

class StateLayout {
 public:
  StateLayout() = default;
  explicit StateLayout(std::vector<BlockSpec> blocks);

  const std::vector<BlockSpec>& blocks() const { return blocks_; }
  const BlockSpec& block(const std::string& label) const;
  std::size_t index(const std::string& label) const;
  Index node_dim() const;
  /// Per-node spaces (label, coefficient dimension).
  std::vector<Space> node_spaces() const;
  /// Spaces of the grid-level state with `nodes` nodes (block-major).
  std::vector<Space> grid_spaces(Index nodes) const;

 private:
  std::vector<BlockSpec> blocks_;
};

struct Validity {
  bool valid = true;
  std::vector<std::string> reasons;   // why invalid
  std::vector<std::string> warnings;  // e.g. indefinite M2

  static Validity ok() { return {}; }
};

class MaterialLaw {
 public:
  MaterialLaw(StateLayout layout, BlockOperator m0, BlockOperator m1, BlockOperator m2);

  const StateLayout& layout() const { return layout_; }
  const BlockOperator& m0() const { return m0_; }
  const BlockOperator& m1() const { return m1_; }
  const BlockOperator& m2() const { return m2_; }
  const Validity& validity() const { return validity_; }

 private:
  StateLayout layout_;
  BlockOperator m0_, m1_, m2_;
  Validity validity_;
};

/// valid iff M0 selfadjoint and positive definite, M1 skew, M2 selfadjoint.
/// An indefinite M2 is accepted with a warning.
Validity validate(const BlockOperator& m0, const BlockOperator& m1, const BlockOperator& m2);
Validity validate(const MaterialLaw& law);

/// 2 mu sym0 + 2 alpha skew + (3 lambda + 2 mu) P.
Matrix isotropic_C(double alpha, double mu, double lambda);

struct IsotropicCheck {
  Verdict verdict = Verdict::pos;
  std::vector<std::string> violations;
};

struct MicromorphicIsoParams {
  double mu0 = 1, lambda0 = 1, beta0 = 0, omega0 = 0;
  double mu1 = 1, lambda1 = 1, alpha1 = 1;
  Matrix c2 = Matrix::Identity(27, 27);
};

struct HemitropicIsoParams {
  double mu0 = 1, alpha0 = 1, lambda0 = 1;
  double mu2 = 1, alpha2 = 1, lambda2 = 1;
  double kappa0 = 0, nu0 = 0, delta0 = 0;
};

/// Quantities within this distance of zero make an isotropic verdict marginal.
inline constexpr double kIsotropicMarginalBand = 1e-8;

IsotropicCheck check_micromorphic_isotropic(const MicromorphicIsoParams& p);
IsotropicCheck check_hemitropic_isotropic(const HemitropicIsoParams& p);

struct MicromorphicBlocks {
  Matrix c0;  // sym -> sym, 6x6
  Matrix g0;  // 6x9
  Matrix f0;  // 6x27
  Matrix c1;  // 9x9
  Matrix d0;  // 9x27
  Matrix c2;  // 27x27
};

MicromorphicBlocks micromorphic_isotropic_blocks(const MicromorphicIsoParams& p);

/// The 42x42 constitutive matrix on (L22, L23, sym) whose inverse is W.
Matrix micromorphic_constitutive(const MicromorphicBlocks& b);
Matrix micromorphic_W(const MicromorphicBlocks& b);

struct HemitropicBlocks {
  Matrix c0, e, c2;  // 9x9 each; the stiffness is [[C0, E^T], [E, C2]]
};

HemitropicBlocks hemitropic_isotropic_blocks(const HemitropicIsoParams& p);
BlockOperator hemitropic_stiffness(const HemitropicBlocks& b);

struct MicrostretchBlocks {
  Matrix c0;  // 9x9   (e, e)
  Matrix b;   // 9x9   (e, kappa)
  Matrix d;   // 9x1   (e, phi)
  Matrix f;   // 9x3   (e, zeta)
  Matrix c1;  // 9x9   (kappa, kappa)
  Matrix e;   // 9x1   (kappa, phi)
  Matrix g;   // 9x3   (kappa, zeta)
  Matrix c2;  // 1x1   (phi, phi)
  Matrix k;   // 1x3   (phi, zeta)
  Matrix c3;  // 3x3   (zeta, zeta)
};

struct MicrostretchReduction {
  Matrix w;            // inverse of [[C0,B,F],[B*,C1,G],[F*,G*,C3]], 21x21
  Matrix m2_block;     // C2 - (D* E* K) W (D; E; K*), 1x1
  Matrix m1_coupling;  // W (D; E; K*), 21x1
};

/// [[C0,B,F],[B*,C1,G],[F*,G*,C3]].
Matrix microstretch_stiffness(const MicrostretchBlocks& b);
/// (D; E; K*), 21x1.
Matrix microstretch_phi_column(const MicrostretchBlocks& b);
MicrostretchReduction microstretch_reduce(const MicrostretchBlocks& b);
/// C2 choice that makes the reduced M2 block vanish.
Matrix microstretch_zero_m2_c2(const MicrostretchBlocks& b);

}  // namespace evoel
