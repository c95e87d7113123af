#include "evoel/material_laws.hpp"

#include "evoel/error.hpp"

#include <cmath>
#include <sstream>

namespace evoel {

using namespace tensor;

namespace {

Matrix invert_checked(const Matrix& a, const char* what) {
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) throw SingularError(std::string(what) + " is singular");
  return lu.inverse();
}

void require_shape(const Matrix& m, Index r, Index c, const char* name) {
  if (m.rows() != r || m.cols() != c) {
    std::ostringstream os;
    os << name << " must be " << r << "x" << c << ", got " << m.rows() << "x" << m.cols();
    throw ShapeError(os.str());
  }
}

// Records a strict inequality q > 0 under `message`.
void require_positive(IsotropicCheck& c, double q, const std::string& message) {
  if (std::abs(q) <= kIsotropicMarginalBand) {
    if (c.verdict == Verdict::pos) c.verdict = Verdict::marginal;
    c.violations.push_back(message + " (marginal)");
  } else if (q < 0) {
    c.verdict = Verdict::indef;
    c.violations.push_back(message);
  }
}

}  // namespace

StateLayout::StateLayout(std::vector<BlockSpec> blocks) : blocks_(std::move(blocks)) {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    for (std::size_t j = i + 1; j < blocks_.size(); ++j)
      if (blocks_[i].label == blocks_[j].label) throw ShapeError("duplicate block label '" + blocks_[i].label + "'");
}

const BlockSpec& StateLayout::block(const std::string& label) const { return blocks_[index(label)]; }

std::size_t StateLayout::index(const std::string& label) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].label == label) return i;
  throw ShapeError("layout has no block '" + label + "'");
}

Index StateLayout::node_dim() const {
  Index n = 0;
  for (const auto& b : blocks_) n += b.node_dim();
  return n;
}

std::vector<Space> StateLayout::node_spaces() const {
  std::vector<Space> s;
  for (const auto& b : blocks_) s.push_back({b.label, b.node_dim()});
  return s;
}

std::vector<Space> StateLayout::grid_spaces(Index nodes) const {
  std::vector<Space> s;
  for (const auto& b : blocks_) s.push_back({b.label, nodes * b.node_dim()});
  return s;
}

MaterialLaw::MaterialLaw(StateLayout layout, BlockOperator m0, BlockOperator m1, BlockOperator m2)
    : layout_(std::move(layout)), m0_(std::move(m0)), m1_(std::move(m1)), m2_(std::move(m2)) {
  const auto spaces = layout_.node_spaces();
  for (const BlockOperator* m : {&m0_, &m1_, &m2_})
    if (m->row_spaces() != spaces || m->col_spaces() != spaces)
      throw ShapeError("material law coefficient spaces do not match the layout");
  validity_ = validate(m0_, m1_, m2_);
}

Validity validate(const BlockOperator& m0, const BlockOperator& m1, const BlockOperator& m2) {
  Validity v;
  const auto c0 = classify(m0);
  const auto c1 = classify(m1);
  const auto c2 = classify(m2);
  if (!c0.selfadjoint) v.reasons.push_back("M0 not selfadjoint");
  if (!c0.positive_definite()) v.reasons.push_back(std::string("M0 not positive definite (") + std::string(to_string(c0.definiteness)) + ")");
  if (!c1.skew) v.reasons.push_back("M1 not skew");
  if (!c2.selfadjoint) v.reasons.push_back("M2 not selfadjoint");
  if (c2.selfadjoint && c2.definiteness == Verdict::indef)
    v.warnings.push_back("M2 indefinite: well-posedness needs a sufficiently large rho");
  v.valid = v.reasons.empty();
  return v;
}

Validity validate(const MaterialLaw& law) { return validate(law.m0(), law.m1(), law.m2()); }

Matrix isotropic_C(double alpha, double mu, double lambda) {
  return 2.0 * mu * sym0_map() + 2.0 * alpha * skew_map() + (3.0 * lambda + 2.0 * mu) * volumetric_map();
}

IsotropicCheck check_micromorphic_isotropic(const MicromorphicIsoParams& p) {
  IsotropicCheck c;
  require_positive(c, p.mu1, "mu1 must be positive");
  require_positive(c, p.lambda1 + 2.0 / 3.0 * p.mu1, "lambda1 + 2/3 mu1 must be positive");
  require_positive(c, p.alpha1, "alpha1 must be positive");
  require_positive(c, p.mu1 * p.mu0 - p.omega0 * p.omega0, "mu1 mu0 - omega0^2 must be positive");
  const double k0 = 3.0 * p.lambda0 + 2.0 * p.mu0;
  const double k1 = 3.0 * p.lambda1 + 2.0 * p.mu1;
  const double kb = 3.0 * p.beta0 + 2.0 * p.omega0;
  require_positive(c, k1 * k0 - kb * kb, "(3 lambda1 + 2 mu1)(3 lambda0 + 2 mu0) - (3 beta0 + 2 omega0)^2 must be positive");
  require_shape(p.c2, 27, 27, "C2");
  const Verdict v2 = definiteness(0.5 * (p.c2 + p.c2.transpose()));
  if (v2 == Verdict::indef) {
    c.verdict = Verdict::indef;
    c.violations.push_back("C2 must be positive definite");
  } else if (v2 == Verdict::marginal) {
    if (c.verdict == Verdict::pos) c.verdict = Verdict::marginal;
    c.violations.push_back("C2 must be positive definite (marginal)");
  }
  return c;
}

IsotropicCheck check_hemitropic_isotropic(const HemitropicIsoParams& p) {
  IsotropicCheck c;
  const double l0 = p.lambda0 + 2.0 / 3.0 * p.mu0;
  const double l2 = p.lambda2 + 2.0 / 3.0 * p.mu2;
  const double d0 = p.delta0 + 2.0 / 3.0 * p.kappa0;
  require_positive(c, p.mu0, "mu0 must be positive");
  require_positive(c, p.alpha0, "alpha0 must be positive");
  require_positive(c, l0, "lambda0 + 2/3 mu0 must be positive");
  require_positive(c, p.mu0 * p.mu2 - p.kappa0 * p.kappa0, "mu0 mu2 - kappa0^2 must be positive");
  require_positive(c, p.alpha0 * p.alpha2 - p.nu0 * p.nu0, "alpha0 alpha2 - nu0^2 must be positive");
  require_positive(c, l2 * l0 - d0 * d0,
                   "(lambda2 + 2/3 mu2)(lambda0 + 2/3 mu0) - (delta0 + 2/3 kappa0)^2 must be positive");
  return c;
}

MicromorphicBlocks micromorphic_isotropic_blocks(const MicromorphicIsoParams& p) {
  const Matrix is = iota_sym();
  MicromorphicBlocks b;
  b.c0 = is.transpose() * (2.0 * p.mu0 * sym0_map() + (3.0 * p.lambda0 + 2.0 * p.mu0) * volumetric_map()) * is;
  b.c1 = isotropic_C(p.alpha1, p.mu1, p.lambda1);
  b.g0 = is.transpose() * (2.0 * p.omega0 * sym0_map() + (3.0 * p.beta0 + 2.0 * p.omega0) * volumetric_map());
  b.f0 = Matrix::Zero(6, 27);
  b.d0 = Matrix::Zero(9, 27);
  b.c2 = p.c2;
  return b;
}

Matrix micromorphic_constitutive(const MicromorphicBlocks& b) {
  require_shape(b.c0, 6, 6, "C0");
  require_shape(b.g0, 6, 9, "G0");
  require_shape(b.f0, 6, 27, "F0");
  require_shape(b.c1, 9, 9, "C1");
  require_shape(b.d0, 9, 27, "D0");
  require_shape(b.c2, 27, 27, "C2");
  const Matrix is = iota_sym();
  const Matrix ist = is.transpose();
  Matrix n = Matrix::Zero(42, 42);
  n.block(0, 0, 9, 9) = is * b.c0 * ist + b.g0.transpose() * ist + is * b.g0 + b.c1;
  n.block(0, 9, 9, 27) = is * b.f0 + b.d0;
  n.block(0, 36, 9, 6) = is * b.g0 * is + b.c1 * is;
  n.block(9, 0, 27, 9) = b.f0.transpose() * ist + b.d0.transpose();
  n.block(9, 9, 27, 27) = b.c2;
  n.block(9, 36, 27, 6) = b.d0.transpose() * is;
  n.block(36, 0, 6, 9) = ist * b.g0.transpose() * ist + ist * b.c1;
  n.block(36, 9, 6, 27) = ist * b.d0;
  n.block(36, 36, 6, 6) = ist * b.c1 * is;
  return n;
}

Matrix micromorphic_W(const MicromorphicBlocks& b) {
  return invert_checked(micromorphic_constitutive(b), "micromorphic constitutive matrix");
}

HemitropicBlocks hemitropic_isotropic_blocks(const HemitropicIsoParams& p) {
  HemitropicBlocks b;
  b.c0 = isotropic_C(p.alpha0, p.mu0, p.lambda0);
  b.c2 = isotropic_C(p.alpha2, p.mu2, p.lambda2);
  b.e = isotropic_C(p.nu0, p.kappa0, p.delta0);
  return b;
}

BlockOperator hemitropic_stiffness(const HemitropicBlocks& b) {
  require_shape(b.c0, 9, 9, "C0");
  require_shape(b.e, 9, 9, "E");
  require_shape(b.c2, 9, 9, "C2");
  BlockOperator s = BlockOperator::square({{"sigma", 9}, {"tau", 9}});
  s.set_block("sigma", "sigma", b.c0);
  s.set_block("sigma", "tau", Matrix(b.e.transpose()));
  s.set_block("tau", "sigma", b.e);
  s.set_block("tau", "tau", b.c2);
  return s;
}

Matrix microstretch_stiffness(const MicrostretchBlocks& b) {
  require_shape(b.c0, 9, 9, "C0");
  require_shape(b.b, 9, 9, "B");
  require_shape(b.f, 9, 3, "F");
  require_shape(b.c1, 9, 9, "C1");
  require_shape(b.g, 9, 3, "G");
  require_shape(b.c3, 3, 3, "C3");
  Matrix s(21, 21);
  s << b.c0, b.b, b.f,
       b.b.transpose(), b.c1, b.g,
       b.f.transpose(), b.g.transpose(), b.c3;
  return s;
}

Matrix microstretch_phi_column(const MicrostretchBlocks& b) {
  require_shape(b.d, 9, 1, "D");
  require_shape(b.e, 9, 1, "E");
  require_shape(b.k, 1, 3, "K");
  Matrix col(21, 1);
  col << b.d, b.e, b.k.transpose();
  return col;
}

MicrostretchReduction microstretch_reduce(const MicrostretchBlocks& b) {
  require_shape(b.c2, 1, 1, "C2");
  MicrostretchReduction r;
  r.w = invert_checked(microstretch_stiffness(b), "microstretch stiffness");
  const Matrix col = microstretch_phi_column(b);
  r.m1_coupling = r.w * col;
  r.m2_block = b.c2 - col.transpose() * r.w * col;
  return r;
}

Matrix microstretch_zero_m2_c2(const MicrostretchBlocks& b) {
  const Matrix w = invert_checked(microstretch_stiffness(b), "microstretch stiffness");
  const Matrix col = microstretch_phi_column(b);
  return col.transpose() * w * col;
}

}  // namespace evoel
