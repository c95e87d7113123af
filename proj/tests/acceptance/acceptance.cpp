// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "evoel/error.hpp"
#include "evoel/evolution.hpp"
#include "evoel/material_laws.hpp"
#include "evoel/model_zoo.hpp"
#include "evoel/operator_blocks.hpp"
#include "evoel/reduction.hpp"
#include "evoel/tensor_algebra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace evoel;
using namespace evoel::tensor;

namespace {

// Pinned tolerances.
constexpr double kProjectorTol = 1e-14;
constexpr double kAdjointTol = 1e-15;
constexpr double kUnitaryTol = 1e-15;
constexpr double kLambdaSkewTol = 1e-14;
constexpr double kMarginalBand = 1e-8;
constexpr double kInverseRelTol = 1e-10;
constexpr double kDriftRelTol = 1e-8;
constexpr double kBalanceOrderMin = 1.9;
constexpr double kBlockQuantityRelTol = 1e-6;
constexpr double kEdgeTol = 1e-12;
constexpr double kDynamicsTol = 1e-10;
constexpr double kZeroM2RelTol = 1e-12;
constexpr double kWeightedSlack = 10.0;  // bound factor (1 + 10 dt)
constexpr double kChiRelTol = 1e-4;

const Grid kGrid8(8, 1.0 / 9.0);
const Grid kGrid4(4, 1.0 / 5.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (Index k = 0; k < m.nonZeros(); ++k) r = std::max(r, std::abs(m.valuePtr()[k]));
  return r;
}

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

Matrix random_spd(std::mt19937_64& rng, Index n, double shift) {
  const Matrix a = random_matrix(rng, n, n);
  return a * a.transpose() / static_cast<double>(n) + shift * Matrix::Identity(n, n);
}

ModelSpec spec(const std::string& name, const Grid& g) {
  ModelSpec s;
  s.name = name;
  s.grid = g;
  return s;
}

// Spatially constant push on the first (kinetic) block.
Vector push_first_block(const EvoProblem& p, const Grid& g, Index node_dim) {
  Vector s = Vector::Zero(p.size());
  s.head(g.nodes() * node_dim).setOnes();
  return s;
}

// --- 1 ---------------------------------------------------------------------------

Outcome projectors() {
  std::mt19937_64 rng(1);
  const Matrix maps[] = {skew_map(), sym0_map(), volumetric_map()};
  double err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const TensorValue x(2, random_matrix(rng, 9, 1));
    const TensorValue y(2, random_matrix(rng, 9, 1));
    const Vector sum = skew(x).entries() + sym0(x).entries() + proj_P(x).entries();
    err = std::max(err, (sum - x.entries()).cwiseAbs().maxCoeff());
    const TensorValue px[] = {skew(x), sym0(x), proj_P(x)};
    const TensorValue py[] = {skew(y), sym0(y), proj_P(y)};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) err = std::max(err, std::abs(inner(px[a], py[b])));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a != b) err = std::max(err, max_abs(Matrix(maps[a] * maps[b])));
  return {err <= kProjectorTol, "max error " + fmt("%.2e", err)};
}

// --- 2 ---------------------------------------------------------------------------

Outcome lambda_calculus() {
  std::mt19937_64 rng(2);
  double adj = 0.0, unit = 0.0, skew_err = 0.0;
  const Matrix u = lambda_star_map() * iota_skew() / std::sqrt(2.0);
  unit = max_abs(Matrix(u.transpose() * u - Matrix::Identity(3, 3)));
  for (int k = 0; k < 1000; ++k) {
    // unit inputs: the tolerances are relative to |beta| |alpha|
    const TensorValue beta(1, random_matrix(rng, 3, 1).normalized());
    const TensorValue alpha(2, random_matrix(rng, 9, 1).normalized());
    adj = std::max(adj, std::abs(inner(lambda(beta), alpha) - inner(beta, lambda_star(alpha))));
    const Vector x = random_matrix(rng, 3, 1);
    unit = std::max(unit, std::abs((u * x).norm() - x.norm()) / x.norm());
    const TensorValue s = skew(alpha);
    skew_err = std::max(skew_err, (lambda(lambda_star(s)).entries() - 2.0 * s.entries()).cwiseAbs().maxCoeff());
  }
  const bool ok = adj <= kAdjointTol && unit <= kUnitaryTol && skew_err <= kLambdaSkewTol;
  return {ok, "adjointness " + fmt("%.2e", adj) + ", unitary " + fmt("%.2e", unit) + ", skew " + fmt("%.2e", skew_err)};
}

// --- 3 ---------------------------------------------------------------------------

Outcome structural_exactness() {
  double worst = 0.0;
  int models = 0;
  for (const auto& info : zoo_catalog()) {
    const Model m = build(spec(info.name, kGrid8));
    const SparseMatrix a = m.problem.a.to_sparse();
    worst = std::max(worst, max_abs(SparseMatrix(a + SparseMatrix(a.transpose()))));
    ++models;
  }
  return {worst == 0.0 && models == 9, std::to_string(models) + " models, max |A + A^T| = " + fmt("%.1e", worst)};
}

// --- 4 ---------------------------------------------------------------------------

// Smallest eigenvalue of the symmetric part; draws with |lambda_min| inside
// the band are excluded on the direct side as well.
double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Outcome positivity_oracles() {
  std::mt19937_64 rng(4);
  int mm_agree = 0, mm_compared = 0, he_agree = 0, he_compared = 0;
  {
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int k = 0; k < 200; ++k) {
      MicromorphicIsoParams p;
      p.mu0 = u(rng);
      p.lambda0 = u(rng);
      p.beta0 = 0.5 * u(rng);
      p.omega0 = 0.5 * u(rng);
      p.mu1 = u(rng);
      p.lambda1 = u(rng);
      p.alpha1 = u(rng);
      p.c2 = random_spd(rng, 27, 0.2);
      const IsotropicCheck c = check_micromorphic_isotropic(p);
      const double lmin = min_eig(micromorphic_constitutive(micromorphic_isotropic_blocks(p)));
      if (c.verdict == Verdict::marginal || std::abs(lmin) <= kMarginalBand) continue;
      ++mm_compared;
      mm_agree += (c.verdict == Verdict::pos) == (lmin > 0.0);
    }
  }
  {
    std::uniform_real_distribution<double> u(-0.5, 2.0);
    for (int k = 0; k < 200; ++k) {
      HemitropicIsoParams p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      const IsotropicCheck c = check_hemitropic_isotropic(p);
      const double lmin = min_eig(hemitropic_stiffness(hemitropic_isotropic_blocks(p)).to_dense());
      if (c.verdict == Verdict::marginal || std::abs(lmin) <= kMarginalBand) continue;
      ++he_compared;
      he_agree += (c.verdict == Verdict::pos) == (lmin > 0.0);
    }
  }
  const bool ok = mm_agree == mm_compared && he_agree == he_compared && mm_compared > 0 && he_compared > 0;
  return {ok, "micromorphic " + std::to_string(mm_agree) + "/" + std::to_string(mm_compared) + ", hemitropic " +
                  std::to_string(he_agree) + "/" + std::to_string(he_compared) + " agree"};
}

// --- 5 ---------------------------------------------------------------------------

Outcome hemitropic_inverse() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Matrix full = random_spd(rng, 18, 0.05);
    HemitropicBlocks b;
    b.c0 = full.topLeftCorner(9, 9);
    b.e = full.bottomLeftCorner(9, 9);
    b.c2 = full.bottomRightCorner(9, 9);
    const BlockOperator s = hemitropic_stiffness(b);
    const Matrix got = block_inverse_2x2(s).to_dense();
    const Matrix oracle = s.to_dense().fullPivLu().inverse();
    worst = std::max(worst, max_abs(Matrix(got - oracle)) / max_abs(oracle));
  }
  return {worst <= kInverseRelTol, "max relative deviation " + fmt("%.2e", worst)};
}

// --- 6 ---------------------------------------------------------------------------

Outcome causality() {
  const double onset = 0.3, dt = 0.01;
  std::string detail;
  bool ok = true;
  for (Scheme scheme : {Scheme::midpoint, Scheme::implicit_euler}) {
    Model m = build(spec("cosserat", kGrid8));
    EvoProblem& p = m.problem;
    p.horizon = 0.6;
    p.onset = onset;
    p.forcing.add(GaussianPulse{1.0, 0.35, 0.05, onset}, push_first_block(p, kGrid8, 3));
    double before = 0.0, after = 0.0;
    RunOptions opts;
    opts.store_every = 0;
    opts.observer = [&](Index, double t, const Vector& u, const Vector& v) {
      const double x = std::max(u.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff());
      if (t < onset) before = std::max(before, x);
      else after = std::max(after, x);
    };
    const Trajectory tr = run(p, dt, scheme, opts);
    const double first = tr.first_nonzero_step >= 0 ? tr.times[tr.first_nonzero_step] : -1.0;
    const bool s_ok = before == 0.0 && after > 0.0 && first >= onset;
    ok = ok && s_ok;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(scheme)) + ": max |U| before onset " +
              fmt("%.1e", before) + ", first nonzero t = " + fmt("%.2f", first);
  }
  return {ok, detail};
}

// --- 7 ---------------------------------------------------------------------------

Outcome energy_balance() {
  std::string detail;
  bool ok = true;
  const struct {
    const char* name;
    Index kin_dim;
  } models[] = {{"cosserat", 3}, {"microstretch", 3}};

  for (const auto& mdl : models) {
    // conservation after the pulse
    Model m = build(spec(mdl.name, kGrid8));
    EvoProblem p = m.problem;
    const double dt = 1e-3;
    const Index pulse_steps = 100;
    p.horizon = dt * (pulse_steps + 1000);
    p.forcing.add(GaussianPulse{1.0, 0.05, 0.015, 0.0, pulse_steps * dt}, push_first_block(p, kGrid8, mdl.kin_dim));
    const Trajectory tr = run(p, dt, Scheme::midpoint, {0, {}});
    const Index k0 = pulse_steps + 1;
    const double e0 = tr.energy(k0);
    double drift = 0.0;
    for (Index k = k0; k <= tr.steps; ++k) drift = std::max(drift, std::abs(tr.energy(k) - e0));
    const double rel = e0 > 0.0 ? drift / e0 : INFINITY;
    ok = ok && rel <= kDriftRelTol && tr.steps - k0 >= 1000 - 1;

    // balance residual under persistent forcing, trapezoid work quadrature
    double res[3];
    const double dts[3] = {4e-3, 2e-3, 1e-3};
    for (int i = 0; i < 3; ++i) {
      EvoProblem q = m.problem;
      q.horizon = 0.4;
      q.forcing.add(GaussianPulse{1.0, 0.2, 0.05}, push_first_block(q, kGrid8, mdl.kin_dim));
      const Trajectory t = run(q, dts[i], Scheme::midpoint, {0, {}});
      res[i] = energy_balance_residual(t, 0, t.steps, Quadrature::trapezoid);
    }
    const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
    ok = ok && std::min(o1, o2) >= kBalanceOrderMin;
    detail += std::string(detail.empty() ? "" : "; ") + mdl.name + ": drift " + fmt("%.2e", rel) + ", orders " +
              fmt("%.3f", o1) + "/" + fmt("%.3f", o2);
  }
  return {ok, detail};
}

// --- 8 ---------------------------------------------------------------------------

Outcome block_conserved() {
  Model m = build(spec("classical", kGrid8));
  EvoProblem& p = m.problem;
  const double dt = 0.01;
  p.horizon = 2.0;
  p.forcing.add(GaussianPulse{1.0, 0.1, 0.03, 0.0, 0.2}, push_first_block(p, kGrid8, 3));
  const BlockConservedQuantity q(p, "v", "T");
  double ref = -1.0, lo = INFINITY, hi = 0.0;
  RunOptions opts;
  opts.store_every = 0;
  opts.observer = [&](Index k, double, const Vector& u, const Vector& v) {
    if (k < 21) return;
    const double x = q(u, v);
    if (ref < 0.0) ref = x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  };
  run(p, dt, Scheme::midpoint, opts);
  const double rel = ref > 0.0 ? (hi - lo) / ref : INFINITY;
  return {rel <= kBlockQuantityRelTol, "relative variation " + fmt("%.2e", rel)};
}

// --- 9 ---------------------------------------------------------------------------

Outcome descendant_identities() {
  double node = 0.0, grid = 0.0;
  int edges = 0;
  for (const auto& e : zoo_edges()) {
    const ModelSpec from = spec(e.from, kGrid4);
    const Model mother = build(from);
    const Model child = build(edge_target(from, e.to));
    const ReductionMap map = reduction_edge(e.from, e.to);
    const MaterialLaw law = conjugate_law(mother.law, map);
    node = std::max({node, max_deviation(drop_empty_spaces(law.m0()), child.law.m0()),
                     max_deviation(drop_empty_spaces(law.m1()), child.law.m1()),
                     max_deviation(drop_empty_spaces(law.m2()), child.law.m2())});
    const DescendantProblem d = conjugate_problem(mother.problem, map);
    grid = std::max({grid, max_deviation(drop_empty_spaces(d.child.m0), child.problem.m0),
                     max_deviation(drop_empty_spaces(d.child.m1), child.problem.m1),
                     max_deviation(drop_empty_spaces(d.child.m2), child.problem.m2),
                     max_deviation(drop_empty_spaces(d.child.a), child.problem.a)});
    ++edges;
  }
  const bool ok = edges == 7 && node <= kEdgeTol && grid <= kEdgeTol;
  return {ok, std::to_string(edges) + " edges, node " + fmt("%.2e", node) + ", 4^3 grid " + fmt("%.2e", grid)};
}

// --- 10 --------------------------------------------------------------------------

Outcome descendant_dynamics() {
  // Micromorphic coefficients decoupled with respect to the coordinates the
  // classical edge keeps (symmetric part of Sigma).
  ModelSpec s = spec("micromorphic", kGrid4);
  const Matrix w = build_law(s).m0().to_dense().bottomRightCorner(42, 42);
  Matrix proj = Matrix::Zero(42, 42);
  proj.topLeftCorner(9, 9) = sym_map();
  const Matrix rest = Matrix::Identity(42, 42) - proj;
  s.overrides["W"] = proj * w * proj + rest * w * rest;
  const Model m = build(s);
  DescendantProblem d = conjugate_problem(m.problem, reduction_edge("micromorphic", "classical"));
  d.mother.horizon = d.child.horizon = 1.0;
  Forcing f;
  f.add(GaussianPulse{1.0, 0.2, 0.05}, push_first_block(d.child, kGrid4, 3));
  const DynamicsReport r = verify_descendant_dynamics(d, f, 0.01);
  return {r.discrepancy <= kDynamicsTol, "discrepancy " + fmt("%.3e", r.discrepancy) + ", coefficient coupling " +
                                             fmt("%.1e", r.coefficient_coupling) + ", A invariance defect " +
                                             fmt("%.3f", r.a_invariance_defect)};
}

// --- 11 --------------------------------------------------------------------------

Outcome microstretch_zero_m2() {
  std::mt19937_64 rng(11);
  const Matrix st = random_spd(rng, 21, 0.5);
  ModelSpec s = spec("microstretch", kGrid4);
  s.overrides["c0"] = st.block(0, 0, 9, 9);
  s.overrides["b"] = st.block(0, 9, 9, 9);
  s.overrides["f"] = st.block(0, 18, 9, 3);
  s.overrides["c1"] = st.block(9, 9, 9, 9);
  s.overrides["g"] = st.block(9, 18, 9, 3);
  s.overrides["c3"] = st.block(18, 18, 3, 3);
  s.overrides["d"] = random_matrix(rng, 9, 1);
  s.overrides["e"] = random_matrix(rng, 9, 1);
  s.overrides["k"] = random_matrix(rng, 1, 3);
  s.params["zero_m2"] = 1.0;

  MicrostretchBlocks b;
  b.c0 = s.overrides["c0"];
  b.b = s.overrides["b"];
  b.d = s.overrides["d"];
  b.f = s.overrides["f"];
  b.c1 = s.overrides["c1"];
  b.e = s.overrides["e"];
  b.g = s.overrides["g"];
  b.k = s.overrides["k"];
  b.c3 = s.overrides["c3"];
  const double c2 = std::abs(microstretch_zero_m2_c2(b)(0, 0));

  const Model m = build(s);
  const double m2 = max_abs(m.law.m2().to_dense());
  const ReductionMap map = reduction_edge("microstretch", "hemitropic");
  const Model child = build(edge_target(s, "hemitropic"));
  const MaterialLaw law = conjugate_law(m.law, map);
  const DescendantProblem d = conjugate_problem(m.problem, map);
  const double node = std::max({max_deviation(drop_empty_spaces(law.m0()), child.law.m0()),
                                max_deviation(drop_empty_spaces(law.m1()), child.law.m1()),
                                max_deviation(drop_empty_spaces(law.m2()), child.law.m2())});
  const double grid = std::max({max_deviation(drop_empty_spaces(d.child.m0), child.problem.m0),
                                max_deviation(drop_empty_spaces(d.child.m1), child.problem.m1),
                                max_deviation(drop_empty_spaces(d.child.m2), child.problem.m2),
                                max_deviation(drop_empty_spaces(d.child.a), child.problem.a)});
  const bool ok = c2 > 0.0 && m2 <= kZeroM2RelTol * c2 && node <= kEdgeTol && grid <= kEdgeTol;
  return {ok, "|M2| / |C2| = " + fmt("%.1e", m2 / c2) + ", edge node " + fmt("%.2e", node) + ", grid " + fmt("%.2e", grid)};
}

// --- 12 --------------------------------------------------------------------------

Outcome weighted_norm_bound() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double dt = 0.01;
  double worst_ratio = 0.0, chi_err = 0.0;
  for (double rho : {0.5, 1.0, 2.0}) {
    const double horizon = 40.0 / rho;
    const auto steps = static_cast<Index>(std::llround(horizon / dt));
    std::vector<double> t(static_cast<std::size_t>(steps + 1));
    for (Index k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k) * dt;

    for (int sgn = 0; sgn < 50; ++sgn) {
      std::vector<double> phi(t.size());
      const double amp = 2.0 * u01(rng) - 1.0;
      const double a = u01(rng) * horizon / 4.0;
      if (sgn % 2 == 0) {
        const double b = a + u01(rng) * horizon / 4.0 + dt;
        for (std::size_t k = 0; k < t.size(); ++k) phi[k] = t[k] >= a && t[k] < b ? amp : 0.0;
      } else {
        const double w = 0.05 + u01(rng) / rho;
        for (std::size_t k = 0; k < t.size(); ++k) phi[k] = amp * std::exp(-std::pow((t[k] - a) / w, 2));
      }
      const double lhs = weighted_norm(t, antiderivative(t, phi), rho);
      const double rhs = weighted_norm(t, phi, rho);
      worst_ratio = std::max(worst_ratio, lhs / (rhs / rho * (1.0 + kWeightedSlack * dt)));
    }

    const std::vector<double> chi(t.size(), 1.0);
    const double ratio = weighted_norm(t, antiderivative(t, chi), rho) / weighted_norm(t, chi, rho);
    const double exact = 1.0 / (std::sqrt(2.0) * rho);
    chi_err = std::max(chi_err, std::abs(ratio - exact) / exact);
  }
  return {worst_ratio <= 1.0 && chi_err <= kChiRelTol,
          "max norm / bound " + fmt("%.4f", worst_ratio) + ", chi ratio relative error " + fmt("%.2e", chi_err)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"projector suite", projectors},
      {"Lambda calculus", lambda_calculus},
      {"structural exactness of A", structural_exactness},
      {"positivity oracles", positivity_oracles},
      {"hemitropic block inverse", hemitropic_inverse},
      {"causality", causality},
      {"energy balance", energy_balance},
      {"block conserved quantity", block_conserved},
      {"descendant identities", descendant_identities},
      {"descendant dynamics micromorphic -> classical", descendant_dynamics},
      {"microstretch M2 = 0 condition", microstretch_zero_m2},
      {"weighted-norm bound", weighted_norm_bound},
  };
  int failed = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s [%2d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
