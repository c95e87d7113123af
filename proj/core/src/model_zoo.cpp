#include "evoel/model_zoo.hpp"

#include "evoel/error.hpp"

#include <json.hpp>

#include <cmath>
#include <functional>
#include <set>

namespace evoel {

using namespace tensor;

namespace {

const double kSqrt2 = std::sqrt(2.0);

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix inverse(const Matrix& a, const std::string& what) {
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) throw SingularError(what + " is singular");
  return symmetrized(lu.inverse());
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix m = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

// Reads scalar parameters (with catalog defaults) and override matrices.
class Reader {
 public:
  Reader(const ModelSpec& spec, const ModelInfo& info) : spec_(spec), info_(info) {
    for (const auto& [name, v] : spec.params) {
      (void)v;
      bool known = false;
      for (const auto& p : info.params) known = known || p.name == name;
      if (!known) throw std::invalid_argument("model '" + info.name + "' has no parameter '" + name + "'");
    }
    for (const auto& [name, m] : spec.overrides) {
      const OverrideInfo* o = nullptr;
      for (const auto& x : info.overrides)
        if (x.name == name) o = &x;
      if (!o) throw std::invalid_argument("model '" + info.name + "' has no override '" + name + "'");
      if (m.rows() != o->rows || m.cols() != o->cols)
        throw ShapeError("override '" + name + "' must be " + std::to_string(o->rows) + "x" + std::to_string(o->cols));
    }
  }

  double operator()(const std::string& name) const {
    if (auto it = spec_.params.find(name); it != spec_.params.end()) return it->second;
    for (const auto& p : info_.params)
      if (p.name == name) return p.default_value;
    throw std::logic_error("catalog has no parameter " + name);
  }
  bool has(const std::string& name) const { return spec_.overrides.count(name) > 0; }
  const Matrix& mat(const std::string& name) const { return spec_.overrides.at(name); }
  /// Override if given, else scalar parameter times identity.
  Matrix scalar_or(const std::string& name, Index dim) const {
    return has(name) ? mat(name) : Matrix((*this)(name) * Matrix::Identity(dim, dim));
  }

 private:
  const ModelSpec& spec_;
  const ModelInfo& info_;
};

using Violations = std::vector<std::string>;

void require_pd(Violations& v, const Matrix& m, const std::string& name) {
  if ((m - m.transpose()).norm() > 1e-12 * m.norm()) {
    v.push_back(name + " must be symmetric");
    return;
  }
  const Verdict d = definiteness(symmetrized(m));
  if (d == Verdict::indef) v.push_back(name + " must be positive definite");
  else if (d == Verdict::marginal) v.push_back(name + " must be positive definite (marginal)");
}

// Scalar-or-matrix inertia.
void check_inertia(const Reader& r, Violations& v, const std::string& name) {
  if (r.has(name)) require_pd(v, r.mat(name), name);
  else if (!(r(name) > 0.0)) v.push_back(name + " must be positive");
}

// isotropic_C(alpha, mu, lambda) is positive definite iff these hold.
void check_iso(const Reader& r, Violations& v, const std::string& a, const std::string& m, const std::string& l) {
  if (!(r(m) > 0.0)) v.push_back(m + " must be positive");
  if (!(r(a) > 0.0)) v.push_back(a + " must be positive");
  if (!(3.0 * r(l) + 2.0 * r(m) > 0.0)) v.push_back("3 " + l + " + 2 " + m + " must be positive");
}

Matrix iso(const Reader& r, const std::string& a, const std::string& m, const std::string& l) {
  return isotropic_C(r(a), r(m), r(l));
}

// C0 = iota_sym^T (2 mu sym0 + (3 lambda + 2 mu) P) iota_sym.
Matrix sym_stiffness(double mu, double lambda) {
  const Matrix is = iota_sym();
  return is.transpose() * (2.0 * mu * sym0_map() + (3.0 * lambda + 2.0 * mu) * volumetric_map()) * is;
}

void check_sym_iso(const Reader& r, Violations& v, const std::string& m, const std::string& l) {
  if (!(r(m) > 0.0)) v.push_back(m + " must be positive");
  if (!(3.0 * r(l) + 2.0 * r(m) > 0.0)) v.push_back("3 " + l + " + 2 " + m + " must be positive");
}

void set_split(BlockOperator& op, const std::vector<std::string>& labels, const Matrix& big) {
  std::vector<Index> off{0};
  for (const auto& l : labels) off.push_back(off.back() + op.row_spaces()[op.row_index(l)].dim);
  if (big.rows() != off.back() || big.cols() != off.back()) throw ShapeError("set_split: size mismatch");
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j) {
      Matrix b = big.block(off[i], off[j], off[i + 1] - off[i], off[j + 1] - off[j]);
      if (b.size() > 0 && b.cwiseAbs().maxCoeff() != 0.0) op.set_block(labels[i], labels[j], std::move(b));
    }
}

struct Coefficients {
  BlockOperator m0, m1, m2;
};

Coefficients empty_coefficients(const StateLayout& layout) {
  const auto s = layout.node_spaces();
  return {BlockOperator::square(s), BlockOperator::square(s), BlockOperator::square(s)};
}

struct Entry {
  ModelInfo info;
  std::function<Coefficients(const Reader&)> law;
  std::function<void(const Reader&, Violations&)> check;
};

BlockSpec kin(const std::string& l, int order, Subspace s = Subspace::full) { return {l, order, s, Role::kinetic}; }
BlockSpec flux(const std::string& l, int order, Subspace s = Subspace::full) { return {l, order, s, Role::flux}; }

// --- micromorphic -----------------------------------------------------------

const char* kMicromorphicBlockOverrides[] = {"c0", "g0", "f0", "c1", "d0"};

MicromorphicIsoParams micromorphic_iso(const Reader& r) {
  MicromorphicIsoParams p;
  p.mu0 = r("mu0");
  p.lambda0 = r("lambda0");
  p.beta0 = r("beta0");
  p.omega0 = r("omega0");
  p.mu1 = r("mu1");
  p.lambda1 = r("lambda1");
  p.alpha1 = r("alpha1");
  p.c2 = r.scalar_or("c2", 27);
  return p;
}

MicromorphicBlocks micromorphic_blocks(const Reader& r) {
  MicromorphicBlocks b = micromorphic_isotropic_blocks(micromorphic_iso(r));
  if (r.has("c0")) b.c0 = r.mat("c0");
  if (r.has("g0")) b.g0 = r.mat("g0");
  if (r.has("f0")) b.f0 = r.mat("f0");
  if (r.has("c1")) b.c1 = r.mat("c1");
  if (r.has("d0")) b.d0 = r.mat("d0");
  return b;
}

Matrix micromorphic_compliance(const Reader& r) {
  return r.has("W") ? symmetrized(r.mat("W")) : symmetrized(micromorphic_W(micromorphic_blocks(r)));
}

Entry micromorphic_entry() {
  Entry e;
  e.info.name = "micromorphic";
  e.info.summary = "micromorphic elasticity in the variables (u_dot, psi_dot, iota_sym tau + sigma, mu, iota_sym^T sigma)";
  e.info.layout = StateLayout({kin("v", 1), kin("psi", 2), flux("sigma", 2), flux("mu", 3), flux("s", 2, Subspace::sym)});
  e.info.couplings = {{"sigma", "v"}, {"mu", "psi"}};
  e.info.params = {{"rho0", 1}, {"rho2", 1},   {"mu0", 1},    {"lambda0", 1}, {"beta0", 0}, {"omega0", 0},
                   {"mu1", 1},  {"lambda1", 1}, {"alpha1", 1}, {"c2", 1}};
  e.info.overrides = {{"rho0", 3, 3}, {"rho2", 9, 9},  {"c0", 6, 6},  {"g0", 6, 9},  {"f0", 6, 27},
                      {"c1", 9, 9},   {"d0", 9, 27},   {"c2", 27, 27}, {"W", 42, 42}};
  e.law = [layout = e.info.layout](const Reader& r) {
    Coefficients c = empty_coefficients(layout);
    c.m0.set_block("v", "v", r.scalar_or("rho0", 3));
    c.m0.set_block("psi", "psi", r.scalar_or("rho2", 9));
    set_split(c.m0, {"sigma", "mu", "s"}, micromorphic_compliance(r));
    c.m1.set_block("psi", "sigma", Matrix(-skew_map()));
    c.m1.set_block("psi", "s", Matrix(-iota_sym()));
    c.m1.set_block("sigma", "psi", skew_map());
    c.m1.set_block("s", "psi", Matrix(iota_sym().transpose()));
    return c;
  };
  e.check = [](const Reader& r, Violations& v) {
    check_inertia(r, v, "rho0");
    check_inertia(r, v, "rho2");
    if (r.has("W")) {
      require_pd(v, r.mat("W"), "W");
      return;
    }
    bool explicit_blocks = false;
    for (const char* n : kMicromorphicBlockOverrides) explicit_blocks = explicit_blocks || r.has(n);
    if (explicit_blocks) {
      require_pd(v, micromorphic_constitutive(micromorphic_blocks(r)), "constitutive matrix");
      return;
    }
    const auto iso_check = check_micromorphic_isotropic(micromorphic_iso(r));
    v.insert(v.end(), iso_check.violations.begin(), iso_check.violations.end());
  };
  return e;
}

// --- cosserat and its relative ------------------------------------------------

Matrix stiffness_or_iso(const Reader& r, const std::string& name, const std::string& a, const std::string& m,
                        const std::string& l) {
  return r.has(name) ? r.mat(name) : iso(r, a, m, l);
}

void check_stiffness(const Reader& r, Violations& v, const std::string& name, const std::string& a,
                     const std::string& m, const std::string& l) {
  if (r.has(name)) require_pd(v, r.mat(name), name);
  else check_iso(r, v, a, m, l);
}

Entry cosserat_entry() {
  Entry e;
  e.info.name = "cosserat";
  e.info.summary = "Cosserat (micropolar) elasticity, states (u_dot, omega_dot, sigma, tau)";
  e.info.layout = StateLayout({kin("v", 1), kin("w", 1), flux("sigma", 2), flux("tau", 2)});
  e.info.couplings = {{"sigma", "v"}, {"tau", "w"}};
  e.info.params = {{"rho0", 1},   {"rho1", 1}, {"alpha0", 1}, {"mu0", 1},
                   {"lambda0", 1}, {"alpha1", 1}, {"mu1", 1},   {"lambda1", 1}};
  e.info.overrides = {{"rho0", 3, 3}, {"rho1", 3, 3}, {"c0", 9, 9}, {"c1", 9, 9}};
  e.law = [layout = e.info.layout](const Reader& r) {
    Coefficients c = empty_coefficients(layout);
    c.m0.set_block("v", "v", r.scalar_or("rho0", 3));
    c.m0.set_block("w", "w", r.scalar_or("rho1", 3));
    c.m0.set_block("sigma", "sigma", inverse(stiffness_or_iso(r, "c0", "alpha0", "mu0", "lambda0"), "C0"));
    c.m0.set_block("tau", "tau", inverse(stiffness_or_iso(r, "c1", "alpha1", "mu1", "lambda1"), "C1"));
    c.m1.set_block("w", "sigma", Matrix(-lambda_star_map()));
    c.m1.set_block("sigma", "w", lambda_map());
    return c;
  };
  e.check = [](const Reader& r, Violations& v) {
    check_inertia(r, v, "rho0");
    check_inertia(r, v, "rho1");
    check_stiffness(r, v, "c0", "alpha0", "mu0", "lambda0");
    check_stiffness(r, v, "c1", "alpha1", "mu1", "lambda1");
  };
  return e;
}

// The mu-block stiffness acts on (gradient slot, skew coordinate) pairs; the
// isotropic default uses the same formula as on (slot, vector) pairs.
Entry cosserat_relative_entry() {
  Entry e;
  e.info.name = "cosserat_relative";
  e.info.summary = "relative of Cosserat elasticity with skew micro-rotation rate, states (u_dot, omega, sigma, mu)";
  e.info.layout = StateLayout({kin("v", 1), kin("omega", 2, Subspace::skew), flux("sigma", 2), flux("mu", 3, Subspace::skew)});
  e.info.couplings = {{"sigma", "v"}, {"mu", "omega"}};
  e.info.params = {{"rho0", 1},   {"rho2", 1},   {"alpha0", 1}, {"mu0", 1},      {"lambda0", 1},
                   {"alpha1", 1}, {"mu1", 1},    {"lambda1", 1}, {"coupling", kSqrt2}};
  e.info.overrides = {{"rho0", 3, 3}, {"rho2", 3, 3}, {"c0", 9, 9}, {"c2", 9, 9}, {"compliance", 18, 18}};
  e.law = [layout = e.info.layout](const Reader& r) {
    Coefficients c = empty_coefficients(layout);
    c.m0.set_block("v", "v", r.scalar_or("rho0", 3));
    c.m0.set_block("omega", "omega", r.scalar_or("rho2", 3));
    if (r.has("compliance")) {
      set_split(c.m0, {"sigma", "mu"}, symmetrized(r.mat("compliance")));
    } else {
      c.m0.set_block("sigma", "sigma", inverse(stiffness_or_iso(r, "c0", "alpha0", "mu0", "lambda0"), "C0"));
      c.m0.set_block("mu", "mu", inverse(stiffness_or_iso(r, "c2", "alpha1", "mu1", "lambda1"), "C2"));
    }
    const double k = r("coupling");
    if (k != 0.0) {
      c.m1.set_block("omega", "sigma", Matrix(-k * iota_skew().transpose()));
      c.m1.set_block("sigma", "omega", Matrix(k * iota_skew()));
    }
    return c;
  };
  e.check = [](const Reader& r, Violations& v) {
    check_inertia(r, v, "rho0");
    check_inertia(r, v, "rho2");
    if (r.has("compliance")) {
      require_pd(v, r.mat("compliance"), "compliance");
      return;
    }
    check_stiffness(r, v, "c0", "alpha0", "mu0", "lambda0");
    check_stiffness(r, v, "c2", "alpha1", "mu1", "lambda1");
  };
  return e;
}

// --- hemitropic ---------------------------------------------------------------

HemitropicBlocks hemitropic_blocks(const Reader& r) {
  HemitropicIsoParams p;
  p.mu0 = r("mu0");
  p.alpha0 = r("alpha0");
  p.lambda0 = r("lambda0");
  p.mu2 = r("mu2");
  p.alpha2 = r("alpha2");
  p.lambda2 = r("lambda2");
  p.kappa0 = r("kappa0");
  p.nu0 = r("nu0");
  p.delta0 = r("delta0");
  HemitropicBlocks b = hemitropic_isotropic_blocks(p);
  if (r.has("c0")) b.c0 = r.mat("c0");
  if (r.has("e")) b.e = r.mat("e");
  if (r.has("c2")) b.c2 = r.mat("c2");
  return b;
}

Entry hemitropic_entry() {
  Entry e;
  e.info.name = "hemitropic";
  e.info.summary = "hemitropic micropolar elasticity with coupling switches eta0, eta1, states (u_dot, omega_dot, sigma, tau)";
  e.info.layout = StateLayout({kin("v", 1), kin("w", 1), flux("sigma", 2), flux("tau", 2)});
  e.info.couplings = {{"sigma", "v"}, {"tau", "w"}};
  e.info.params = {{"rho0", 1},    {"rho1", 1},   {"eta0", 1},   {"eta1", 0},    {"mu0", 1},
                   {"alpha0", 1},  {"lambda0", 1}, {"mu2", 1},    {"alpha2", 1},  {"lambda2", 1},
                   {"kappa0", 0},  {"nu0", 0},     {"delta0", 0}};
  e.info.overrides = {{"rho0", 3, 3}, {"rho1", 3, 3}, {"c0", 9, 9}, {"e", 9, 9}, {"c2", 9, 9}};
  e.law = [layout = e.info.layout](const Reader& r) {
    Coefficients c = empty_coefficients(layout);
    c.m0.set_block("v", "v", r.scalar_or("rho0", 3));
    c.m0.set_block("w", "w", r.scalar_or("rho1", 3));
    const BlockOperator inv = block_inverse_2x2(hemitropic_stiffness(hemitropic_blocks(r)));
    set_split(c.m0, {"sigma", "tau"}, symmetrized(inv.to_dense()));
    const double eta0 = r("eta0");
    const double eta1 = r("eta1");
    if (eta1 != 0.0) {
      c.m1.set_block("v", "tau", Matrix(-eta1 * lambda_star_map()));
      c.m1.set_block("tau", "v", Matrix(eta1 * lambda_map()));
    }
    if (eta0 != 0.0) {
      c.m1.set_block("w", "sigma", Matrix(-eta0 * lambda_star_map()));
      c.m1.set_block("sigma", "w", Matrix(eta0 * lambda_map()));
    }
    return c;
  };
  e.check = [](const Reader& r, Violations& v) {
    check_inertia(r, v, "rho0");
    check_inertia(r, v, "rho1");
    if (r.has("c0") || r.has("e") || r.has("c2")) {
      require_pd(v, hemitropic_stiffness(hemitropic_blocks(r)).to_dense(), "stiffness [[C0, E^T], [E, C2]]");
      return;
    }
    HemitropicIsoParams p;
    p.mu0 = r("mu0");
    p.alpha0 = r("alpha0");
    p.lambda0 = r("lambda0");
    p.mu2 = r("mu2");
    p.alpha2 = r("alpha2");
    p.lambda2 = r("lambda2");
    p.kappa0 = r("kappa0");
    p.nu0 = r("nu0");
    p.delta0 = r("delta0");
    const auto c = check_hemitropic_isotropic(p);
    v.insert(v.end(), c.violations.begin(), c.violations.end());
  };
  return e;
}

// --- classical ----------------------------------------------------------------

Entry classical_entry() {
  Entry e;
  e.info.name = "classical";
  e.info.summary = "classical linear elasticity, states (u_dot, T) with symmetric stress";
  e.info.layout = StateLayout({kin("v", 1), flux("T", 2, Subspace::sym)});
  e.info.couplings = {{"T", "v"}};
  e.info.params = {{"rho0", 1}, {"mu", 1}, {"lambda", 1}};
  e.info.overrides = {{"rho0", 3, 3}, {"c0", 6, 6}, {"compliance", 6, 6}};
  e.law = [layout = e.info.layout](const Reader& r) {
    Coefficients c = empty_coefficients(layout);
    c.m0.set_block("v", "v", r.scalar_or("rho0", 3));
    Matrix comp;
    if (r.has("compliance")) comp = symmetrized(r.mat("compliance"));
    else comp = inverse(r.has("c0") ? r.mat("c0") : sym_stiffness(r("mu"), r("lambda")), "C0");
    c.m0.set_block("T", "T", comp);
    return c;
  };
  e.check = [](const Reader& r, Violations& v) {
    check_inertia(r, v, "rho0");
    if (r.has("compliance")) require_pd(v, r.mat("compliance"), "compliance");
    else if (r.has("c0")) require_pd(v, r.mat("c0"), "c0");
    else check_sym_iso(r, v, "mu", "lambda");
  };
  return e;
}

// --- descendants of the micromorphic model without M1 ---------------------------

// Stress block (order 2, `stress_sub`) and couple-stress block (order 3,
// `couple_sub`), with the kinetic micro block in `micro_sub`.
Entry reduced_entry(const std::string& name, const std::string& summary, const std::string& micro_label,
                    Subspace micro_sub, const std::string& stress_label, Subspace stress_sub, Subspace couple_sub) {
  Entry e;
  e.info.name = name;
  e.info.summary = summary;
  e.info.layout = StateLayout({kin("v", 1), kin(micro_label, 2, micro_sub), flux(stress_label, 2, stress_sub),
                               flux("mu", 3, couple_sub)});
  e.info.couplings = {{stress_label, "v"}, {"mu", micro_label}};
  const Index dm = subspace_dim(2, micro_sub);
  const Index ds = subspace_dim(2, stress_sub);
  const Index dc = subspace_dim(3, couple_sub);
  const bool sym_stress = stress_sub == Subspace::sym;
  if (sym_stress) e.info.params = {{"rho0", 1}, {"rho2", 1}, {"mu0", 1}, {"lambda0", 1}, {"c2", 1}};
  else e.info.params = {{"rho0", 1}, {"rho2", 1}, {"alpha0", 1}, {"mu0", 1}, {"lambda0", 1}, {"c2", 1}};
  e.info.overrides = {{"rho0", 3, 3}, {"rho2", dm, dm}, {"compliance", ds + dc, ds + dc}};
  e.law = [layout = e.info.layout, micro_label, stress_label, dm, dc, sym_stress](const Reader& r) {
    Coefficients c = empty_coefficients(layout);
    c.m0.set_block("v", "v", r.scalar_or("rho0", 3));
    c.m0.set_block(micro_label, micro_label, r.scalar_or("rho2", dm));
    Matrix comp;
    if (r.has("compliance")) {
      comp = symmetrized(r.mat("compliance"));
    } else {
      const Matrix cs = sym_stress ? sym_stiffness(r("mu0"), r("lambda0")) : iso(r, "alpha0", "mu0", "lambda0");
      comp = block_diag(inverse(cs, "stress stiffness"), Matrix(Matrix::Identity(dc, dc) / r("c2")));
    }
    set_split(c.m0, {stress_label, "mu"}, comp);
    return c;
  };
  e.check = [sym_stress](const Reader& r, Violations& v) {
    check_inertia(r, v, "rho0");
    check_inertia(r, v, "rho2");
    if (r.has("compliance")) {
      require_pd(v, r.mat("compliance"), "compliance");
      return;
    }
    if (sym_stress) check_sym_iso(r, v, "mu0", "lambda0");
    else check_iso(r, v, "alpha0", "mu0", "lambda0");
    if (!(r("c2") > 0.0)) v.push_back("c2 must be positive");
  };
  return e;
}

// --- microstretch ---------------------------------------------------------------

MicrostretchBlocks microstretch_blocks(const Reader& r) {
  MicrostretchBlocks b;
  auto pick = [&r](const char* n, Matrix fallback) { return r.has(n) ? r.mat(n) : fallback; };
  b.c0 = pick("c0", iso(r, "alpha0", "mu0", "lambda0"));
  b.b = pick("b", Matrix::Zero(9, 9));
  b.d = pick("d", r("d") * trace_star_col());
  b.f = pick("f", Matrix::Zero(9, 3));
  b.c1 = pick("c1", iso(r, "alpha1", "mu1", "lambda1"));
  b.e = pick("e", r("e") * trace_star_col());
  b.g = pick("g", Matrix::Zero(9, 3));
  b.k = pick("k", Matrix::Zero(1, 3));
  b.c3 = pick("c3", r("c3") * Matrix::Identity(3, 3));
  b.c2 = r("zero_m2") != 0.0 ? microstretch_zero_m2_c2(b) : pick("c2", Matrix::Constant(1, 1, r("c2")));
  return b;
}

Entry microstretch_entry() {
  Entry e;
  e.info.name = "microstretch";
  e.info.summary = "microstretch elasticity, states (u_dot, psi_dot, phi_dot, tau, mu, pi)";
  e.info.layout = StateLayout({kin("u_dot", 1), kin("psi_dot", 1), kin("phi_dot", 0), flux("tau", 2), flux("mu", 2),
                               flux("pi", 1)});
  e.info.couplings = {{"tau", "u_dot"}, {"mu", "psi_dot"}, {"pi", "phi_dot"}};
  e.info.params = {{"rho0", 1},   {"rho1", 1}, {"rho_phi", 1}, {"alpha0", 1}, {"mu0", 1}, {"lambda0", 1},
                   {"alpha1", 1}, {"mu1", 1},  {"lambda1", 1}, {"c3", 1},     {"d", 0.1}, {"e", 0.1},
                   {"c2", 1},     {"zero_m2", 0}};
  e.info.overrides = {{"rho0", 3, 3}, {"rho1", 3, 3}, {"rho_phi", 1, 1}, {"c0", 9, 9}, {"b", 9, 9},
                      {"d", 9, 1},    {"f", 9, 3},    {"c1", 9, 9},      {"e", 9, 1},  {"g", 9, 3},
                      {"c2", 1, 1},   {"k", 1, 3},    {"c3", 3, 3}};
  e.law = [layout = e.info.layout](const Reader& r) {
    Coefficients c = empty_coefficients(layout);
    const MicrostretchBlocks b = microstretch_blocks(r);
    const MicrostretchReduction red = microstretch_reduce(b);
    c.m0.set_block("u_dot", "u_dot", r.scalar_or("rho0", 3));
    c.m0.set_block("psi_dot", "psi_dot", r.scalar_or("rho1", 3));
    c.m0.set_block("phi_dot", "phi_dot", r.scalar_or("rho_phi", 1));
    set_split(c.m0, {"tau", "mu", "pi"}, symmetrized(red.w));
    c.m1.set_block("psi_dot", "tau", Matrix(-lambda_star_map()));
    c.m1.set_block("tau", "psi_dot", lambda_map());
    const Matrix& wc = red.m1_coupling;  // W (D; E; K*)
    const Index off[] = {0, 9, 18, 21};
    const char* stress[] = {"tau", "mu", "pi"};
    for (int i = 0; i < 3; ++i) {
      const Matrix part = wc.middleRows(off[i], off[i + 1] - off[i]);
      if (part.cwiseAbs().maxCoeff() == 0.0) continue;
      c.m1.set_block("phi_dot", stress[i], Matrix(part.transpose()));
      c.m1.set_block(stress[i], "phi_dot", Matrix(-part));
    }
    if (red.m2_block(0, 0) != 0.0) c.m2.set_block("phi_dot", "phi_dot", red.m2_block);
    return c;
  };
  e.check = [](const Reader& r, Violations& v) {
    check_inertia(r, v, "rho0");
    check_inertia(r, v, "rho1");
    check_inertia(r, v, "rho_phi");
    const MicrostretchBlocks b = microstretch_blocks(r);
    require_pd(v, microstretch_stiffness(b), "microstretch stiffness [[C0, B, F], [B*, C1, G], [F*, G*, C3]]");
  };
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> all = [] {
    std::vector<Entry> v;
    v.push_back(micromorphic_entry());
    v.push_back(cosserat_entry());
    v.push_back(cosserat_relative_entry());
    v.push_back(hemitropic_entry());
    v.push_back(classical_entry());
    v.push_back(reduced_entry("sym_stress", "micromorphic descendant with skew micro-rotation and symmetric stress",
                              "omega", Subspace::skew, "T", Subspace::sym, Subspace::skew));
    v.push_back(reduced_entry("sym0_variant", "micromorphic descendant with trace-free symmetric micro-deformation",
                              "psi", Subspace::sym0, "sigma", Subspace::full, Subspace::sym0));
    v.push_back(reduced_entry("sym0_sym_stress",
                              "micromorphic descendant with trace-free symmetric micro-deformation and symmetric stress",
                              "psi", Subspace::sym0, "T", Subspace::sym, Subspace::sym0));
    v.push_back(microstretch_entry());
    return v;
  }();
  return all;
}

const Entry& entry(const std::string& name) {
  for (const auto& e : entries())
    if (e.info.name == name) return e;
  throw std::invalid_argument("unknown model '" + name + "'");
}

// Micromorphic stress-block compliance restricted by the coordinate maps
// e_stress (9 x ds) and e_couple (27 x dc).
Matrix restricted_compliance(const Matrix& w, const Matrix& e_stress, const Matrix& e_couple) {
  const Matrix e = block_diag(e_stress, e_couple);
  return symmetrized(e.transpose() * w.topLeftCorner(36, 36) * e);
}

}  // namespace

const std::vector<ModelInfo>& zoo_catalog() {
  static const std::vector<ModelInfo> infos = [] {
    std::vector<ModelInfo> v;
    for (const auto& e : entries()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

const ModelInfo& model_info(const std::string& name) { return entry(name).info; }

std::vector<std::string> check_parameters(const ModelSpec& spec) {
  const Entry& e = entry(spec.name);
  const Reader r(spec, e.info);
  Violations v;
  e.check(r, v);
  return v;
}

MaterialLaw build_law(const ModelSpec& spec) {
  const Entry& e = entry(spec.name);
  const Reader r(spec, e.info);
  Coefficients c = e.law(r);
  return MaterialLaw(e.info.layout, std::move(c.m0), std::move(c.m1), std::move(c.m2));
}

Model build(const ModelSpec& spec, bool enforce) {
  if (enforce) {
    const auto v = check_parameters(spec);
    if (!v.empty()) {
      std::string msg = "inadmissible parameters for '" + spec.name + "':";
      for (const auto& s : v) msg += " " + s + ";";
      throw PreconditionError(msg);
    }
  }
  MaterialLaw law = build_law(spec);
  const auto& info = model_info(spec.name);
  EvoProblem p;
  p.m0 = lift_pointwise(law.m0(), spec.grid);
  p.m1 = lift_pointwise(law.m1(), spec.grid);
  p.m2 = lift_pointwise(law.m2(), spec.grid);
  p.a = assemble_A(law.layout(), info.couplings, spec.grid);
  return Model{spec, std::move(law), info.couplings, std::move(p)};
}

const std::vector<ZooEdge>& zoo_edges() {
  static const std::vector<ZooEdge> edges = {
      {"micromorphic", "cosserat_relative", ReductionMap::Kind::descendant},
      {"micromorphic", "classical", ReductionMap::Kind::descendant},
      {"micromorphic", "sym_stress", ReductionMap::Kind::descendant},
      {"micromorphic", "sym0_variant", ReductionMap::Kind::descendant},
      {"micromorphic", "sym0_sym_stress", ReductionMap::Kind::descendant},
      {"cosserat", "cosserat_relative", ReductionMap::Kind::relative},
      {"microstretch", "hemitropic", ReductionMap::Kind::descendant},
  };
  return edges;
}

ReductionMap reduction_edge(const std::string& from, const std::string& to) {
  const StateLayout& src = model_info(from).layout;
  auto b = [&src](const std::string& l) { return src.block(l); };
  using A = BlockAction;
  if (from == "micromorphic") {
    const A v = A::identity(b("v"));
    const A s_gone = A::annihilate(b("s"));
    if (to == "cosserat_relative")
      return ReductionMap(src, {v, A::restrict(b("psi"), Subspace::skew).as("omega"), A::identity(b("sigma")),
                                A::restrict(b("mu"), Subspace::skew), s_gone});
    if (to == "classical")
      return ReductionMap(src, {v, A::annihilate(b("psi")), A::restrict(b("sigma"), Subspace::sym).as("T"),
                                A::annihilate(b("mu")), s_gone});
    if (to == "sym_stress")
      return ReductionMap(src, {v, A::restrict(b("psi"), Subspace::skew).as("omega"),
                                A::restrict(b("sigma"), Subspace::sym).as("T"), A::restrict(b("mu"), Subspace::skew), s_gone});
    if (to == "sym0_variant")
      return ReductionMap(src, {v, A::restrict(b("psi"), Subspace::sym0), A::identity(b("sigma")),
                                A::restrict(b("mu"), Subspace::sym0), s_gone});
    if (to == "sym0_sym_stress")
      return ReductionMap(src, {v, A::restrict(b("psi"), Subspace::sym0), A::restrict(b("sigma"), Subspace::sym).as("T"),
                                A::restrict(b("mu"), Subspace::sym0), s_gone});
  }
  if (from == "cosserat" && to == "cosserat_relative")
    return ReductionMap(src, {A::identity(b("v")), A::lambda_unitary(b("w")).as("omega"), A::identity(b("sigma")),
                              A::lambda_unitary(b("tau")).as("mu")});
  if (from == "microstretch" && to == "hemitropic")
    return ReductionMap(src, {A::identity(b("u_dot")).as("v"), A::identity(b("psi_dot")).as("w"),
                              A::annihilate(b("phi_dot")), A::identity(b("tau")).as("sigma"),
                              A::identity(b("mu")).as("tau"), A::annihilate(b("pi"))});
  model_info(from);
  model_info(to);
  throw std::invalid_argument("no catalog edge " + from + " -> " + to);
}

ModelSpec edge_target(const ModelSpec& from, const std::string& to) {
  reduction_edge(from.name, to);  // rejects unknown edges
  const Entry& e = entry(from.name);
  const Reader r(from, e.info);
  ModelSpec t;
  t.name = to;
  t.grid = from.grid;
  t.overrides["rho0"] = r.scalar_or("rho0", 3);

  if (from.name == "micromorphic") {
    const Matrix w = micromorphic_compliance(r);
    const Matrix rho2 = r.scalar_or("rho2", 9);
    const Matrix id9 = Matrix::Identity(9, 9);
    auto couple = [](const Matrix& iota) { return lift_first_slot(iota); };
    if (to == "cosserat_relative") {
      t.overrides["rho2"] = iota_skew().transpose() * rho2 * iota_skew();
      t.overrides["compliance"] = restricted_compliance(w, id9, couple(iota_skew()));
      t.params["coupling"] = 1.0;
    } else if (to == "classical") {
      t.overrides["compliance"] = symmetrized(iota_sym().transpose() * w.topLeftCorner(9, 9) * iota_sym());
    } else if (to == "sym_stress") {
      t.overrides["rho2"] = iota_skew().transpose() * rho2 * iota_skew();
      t.overrides["compliance"] = restricted_compliance(w, iota_sym(), couple(iota_skew()));
    } else if (to == "sym0_variant") {
      t.overrides["rho2"] = iota_sym0().transpose() * rho2 * iota_sym0();
      t.overrides["compliance"] = restricted_compliance(w, id9, couple(iota_sym0()));
    } else if (to == "sym0_sym_stress") {
      t.overrides["rho2"] = iota_sym0().transpose() * rho2 * iota_sym0();
      t.overrides["compliance"] = restricted_compliance(w, iota_sym(), couple(iota_sym0()));
    }
    return t;
  }
  if (from.name == "cosserat") {
    // rho2 = 1/2 iota_skew^T Lambda rho1 Lambda* iota_skew,
    // C2 = 1/2 (1 (x) iota_skew^T Lambda) C1 (1 (x) Lambda* iota_skew).
    const Matrix il = iota_skew().transpose() * lambda_map();
    const Matrix lil = lift_first_slot(il);
    t.overrides["rho2"] = 0.5 * il * r.scalar_or("rho1", 3) * il.transpose();
    t.overrides["c0"] = stiffness_or_iso(r, "c0", "alpha0", "mu0", "lambda0");
    t.overrides["c2"] = 0.5 * lil * stiffness_or_iso(r, "c1", "alpha1", "mu1", "lambda1") * lil.transpose();
    t.params["coupling"] = kSqrt2;
    return t;
  }
  // microstretch -> hemitropic: Schur complement of the C3 block.
  const MicrostretchBlocks b = microstretch_blocks(r);
  const Matrix c3inv = inverse(b.c3, "C3");
  t.overrides["rho1"] = r.scalar_or("rho1", 3);
  t.overrides["c0"] = b.c0 - b.f * c3inv * b.f.transpose();
  t.overrides["e"] = b.b.transpose() - b.g * c3inv * b.f.transpose();
  t.overrides["c2"] = b.c1 - b.g * c3inv * b.g.transpose();
  t.params["eta0"] = 1.0;
  t.params["eta1"] = 0.0;
  return t;
}

std::pair<Vector, Vector> micromorphic_original_stresses(const Vector& big_sigma, const Vector& s) {
  if (big_sigma.size() != 9 || s.size() != 6) throw ShapeError("micromorphic_original_stresses: expects 9 and 6 entries");
  const Vector sigma = iota_sym() * s + skew_map() * big_sigma;
  const Vector tau = iota_sym().transpose() * (big_sigma - sigma);
  return {tau, sigma};
}

std::string zoo_json() {
  using nlohmann::json;
  json j;
  j["models"] = json::array();
  for (const auto& m : zoo_catalog()) {
    json blocks = json::array();
    for (const auto& b : m.layout.blocks())
      blocks.push_back({{"label", b.label},
                        {"order", b.order},
                        {"subspace", std::string(to_string(b.subspace))},
                        {"role", b.role == Role::kinetic ? "kinetic" : "flux"},
                        {"node_dim", b.node_dim()}});
    json couplings = json::array();
    for (const auto& c : m.couplings) couplings.push_back({{"flux", c.flux}, {"kinetic", c.kinetic}});
    json params = json::object();
    for (const auto& p : m.params) params[p.name] = p.default_value;
    json overrides = json::object();
    for (const auto& o : m.overrides) overrides[o.name] = {o.rows, o.cols};
    j["models"].push_back({{"name", m.name},
                           {"summary", m.summary},
                           {"blocks", blocks},
                           {"couplings", couplings},
                           {"params", params},
                           {"overrides", overrides}});
  }
  j["edges"] = json::array();
  for (const auto& e : zoo_edges())
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"kind", std::string(to_string(e.kind))}});
  return j.dump(2);
}

}  // namespace evoel
