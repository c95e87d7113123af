#include "evoel/evolution.hpp"

#include "evoel/error.hpp"

#include <algorithm>
#include <cmath>

namespace evoel {

double GaussianPulse::operator()(double t) const {
  if (t < onset || t >= end) return 0.0;
  const double z = (t - center) / width;
  return amplitude * std::exp(-z * z);
}

void Forcing::add(Temporal g, Vector spatial) { terms_.push_back({std::move(g), std::move(spatial)}); }

Forcing Forcing::mapped(const SparseMatrix& m) const {
  Forcing out;
  for (const auto& term : terms_) {
    if (term.s.size() != m.cols()) throw ShapeError("forcing vector does not match the map");
    out.add(term.g, m * term.s);
  }
  return out;
}

Vector Forcing::at(double t, Index size) const {
  Vector f = Vector::Zero(size);
  for (const auto& term : terms_) {
    if (term.s.size() != size) throw ShapeError("forcing vector has the wrong length");
    const double g = term.g(t);
    if (g != 0.0) f += g * term.s;
  }
  return f;
}

void EvoProblem::check() const {
  const Index n = m0.rows();
  for (const BlockOperator* m : {&m0, &m1, &m2, &a})
    if (m->rows() != n || m->cols() != n) throw ShapeError("problem operators must be square and of equal size");
  const Validity v = validate(m0, m1, m2);
  if (!v.valid) {
    std::string msg = "invalid material law:";
    for (const auto& r : v.reasons) msg += " " + r + ";";
    throw PreconditionError(msg);
  }
  if (!v.warnings.empty() && !allow_indefinite_m2)
    throw PreconditionError("M2 is indefinite; set allow_indefinite_m2 to run anyway");
  const SparseMatrix as = a.to_sparse();
  const SparseMatrix sum = as + SparseMatrix(as.transpose());
  for (Index k = 0; k < sum.nonZeros(); ++k)
    if (sum.valuePtr()[k] != 0.0) throw PreconditionError("A is not exactly skew-symmetric");
}

EvoProblem EvoProblem::from_matrices(const Matrix& m0, const Matrix& m1, const Matrix& m2, const Matrix& a) {
  const std::vector<Space> s{{"state", m0.rows()}};
  EvoProblem p;
  p.m0 = BlockOperator::from_dense(s, s, m0);
  p.m1 = BlockOperator::from_dense(s, s, m1);
  p.m2 = BlockOperator::from_dense(s, s, m2);
  p.a = BlockOperator::from_dense(s, s, a);
  return p;
}

std::string_view to_string(Scheme s) { return s == Scheme::midpoint ? "midpoint" : "implicit_euler"; }

Scheme scheme_from_string(std::string_view name) {
  if (name == "midpoint") return Scheme::midpoint;
  if (name == "implicit_euler") return Scheme::implicit_euler;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

Stepper::Stepper(const EvoProblem& p, double dt, Scheme scheme, double residual_tol)
    : m0_(p.m0.to_sparse()), m1a_(p.m1.to_sparse() + p.a.to_sparse()), m2_(p.m2.to_sparse()),
      dt_(dt), scheme_(scheme), tol_(residual_tol) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double c1 = scheme == Scheme::midpoint ? 0.5 * dt : dt;
  const double c2 = scheme == Scheme::midpoint ? 0.25 * dt * dt : dt * dt;
  k_ = m0_ + c1 * m1a_ + c2 * m2_;
  k_.makeCompressed();
  if (try_condense(p.a)) return;
  lu_.analyzePattern(k_);
  lu_.factorize(k_);
  if (lu_.info() != Eigen::Success) throw SolverError("step matrix factorization failed: " + lu_.lastErrorMessage(), -1.0);
}

namespace {

SparseMatrix selector(const std::vector<Index>& rows, Index n) {
  std::vector<Triplet> t;
  t.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) t.emplace_back(static_cast<Index>(i), rows[i], 1.0);
  SparseMatrix s(static_cast<Index>(rows.size()), n);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

Index find_root(std::vector<Index>& parent, Index i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

bool Stepper::try_condense(const BlockOperator& a) {
  constexpr Index kMaxLocalBlock = 256;
  const auto& spaces = a.row_spaces();
  std::vector<Index> offset{0};
  for (const auto& sp : spaces) offset.push_back(offset.back() + sp.dim);

  // greedy: largest spaces first, no A block inside the chosen set
  std::vector<std::size_t> order(spaces.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return spaces[x].dim > spaces[y].dim; });
  std::vector<bool> chosen(spaces.size(), false);
  for (std::size_t b : order) {
    bool ok = !a.has_block(b, b);
    for (std::size_t c = 0; c < spaces.size() && ok; ++c)
      if (chosen[c] && (a.has_block(b, c) || a.has_block(c, b))) ok = false;
    chosen[b] = ok;
  }
  std::vector<Index> local, keep;
  for (std::size_t b = 0; b < spaces.size(); ++b)
    for (Index i = offset[b]; i < offset[b + 1]; ++i) (chosen[b] ? local : keep).push_back(i);
  if (local.empty() || keep.empty()) return false;

  const Index n = k_.rows();
  keep_ = selector(keep, n);
  local_ = selector(local, n);
  const SparseMatrix k_ll = local_ * k_ * SparseMatrix(local_.transpose());

  // connected components of K_ll
  const Index nl = k_ll.rows();
  std::vector<Index> parent(static_cast<std::size_t>(nl));
  for (Index i = 0; i < nl; ++i) parent[i] = i;
  for (Index j = 0; j < nl; ++j)
    for (SparseMatrix::InnerIterator it(k_ll, j); it; ++it) {
      const Index ri = find_root(parent, it.row()), rj = find_root(parent, j);
      if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
    }
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(nl));
  for (Index i = 0; i < nl; ++i) groups[find_root(parent, i)].push_back(i);

  std::vector<Triplet> inv;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    const auto m = static_cast<Index>(g.size());
    if (m > kMaxLocalBlock) return false;
    Matrix blk(m, m);
    for (Index c = 0; c < m; ++c)
      for (Index r = 0; r < m; ++r) blk(r, c) = k_ll.coeff(g[r], g[c]);
    Eigen::FullPivLU<Matrix> lu(blk);
    if (!lu.isInvertible()) return false;
    const Matrix bi = lu.inverse();
    for (Index c = 0; c < m; ++c)
      for (Index r = 0; r < m; ++r)
        if (bi(r, c) != 0.0) inv.emplace_back(g[r], g[c], bi(r, c));
  }
  local_inv_.resize(nl, nl);
  local_inv_.setFromTriplets(inv.begin(), inv.end());

  k_kl_ = keep_ * k_ * SparseMatrix(local_.transpose());
  k_lk_ = local_ * k_ * SparseMatrix(keep_.transpose());
  SparseMatrix schur = keep_ * k_ * SparseMatrix(keep_.transpose());
  schur -= SparseMatrix(k_kl_ * SparseMatrix(local_inv_ * k_lk_));
  schur.prune(0.0);
  schur.makeCompressed();
  lu_.analyzePattern(schur);
  lu_.factorize(schur);
  if (lu_.info() != Eigen::Success) return false;
  condensed_ = true;
  return true;
}

Vector Stepper::solve(const Vector& rhs) {
  if (!condensed_) return lu_.solve(rhs);
  const Vector y = local_inv_ * (local_ * rhs);
  const Vector xk = lu_.solve(Vector(keep_ * rhs - k_kl_ * y));
  const Vector xl = y - local_inv_ * (k_lk_ * xk);
  return keep_.transpose() * xk + local_.transpose() * xl;
}

void Stepper::step(Vector& u, Vector& v, const Vector& f) {
  Vector rhs;
  if (scheme_ == Scheme::midpoint) {
    rhs = dt_ * f + m0_ * u - 0.5 * dt_ * (m1a_ * u) - dt_ * (m2_ * v) - 0.25 * dt_ * dt_ * (m2_ * u);
  } else {
    rhs = m0_ * u + dt_ * f - dt_ * (m2_ * v);
  }
  const double rn = rhs.norm();
  if (rn == 0.0) {
    // zero data: the unique solution is zero
    last_residual_ = 0.0;
    u.setZero();
    return;
  }
  Vector next = solve(rhs);
  last_residual_ = (k_ * next - rhs).norm() / rn;
  if (!(last_residual_ <= tol_)) throw SolverError("linear solve missed the residual target", last_residual_);
  if (scheme_ == Scheme::midpoint) v += 0.5 * dt_ * (u + next);
  else v += dt_ * next;
  u = std::move(next);
}

std::pair<Vector, Vector> step_midpoint(const EvoProblem& p, const Vector& u, const Vector& v, const Vector& f_half, double dt) {
  Stepper s(p, dt, Scheme::midpoint);
  Vector u1 = u, v1 = v;
  s.step(u1, v1, f_half);
  return {u1, v1};
}

std::pair<Vector, Vector> step_implicit_euler(const EvoProblem& p, const Vector& u, const Vector& v, const Vector& f, double dt) {
  Stepper s(p, dt, Scheme::implicit_euler);
  Vector u1 = u, v1 = v;
  s.step(u1, v1, f);
  return {u1, v1};
}

Trajectory run(const EvoProblem& p, double dt, Scheme scheme, const RunOptions& options) {
  p.check();
  if (!(dt > 0.0) || !(p.horizon > dt)) throw std::invalid_argument("need 0 < dt < horizon");
  Stepper stepper(p, dt, scheme);
  const Index n = p.size();
  const Index steps = static_cast<Index>(std::llround(p.horizon / dt));

  Trajectory tr;
  tr.dt = dt;
  tr.steps = steps;
  tr.scheme = scheme;
  tr.times.reserve(steps + 1);

  Vector u = Vector::Zero(n), v = Vector::Zero(n);
  Vector f_prev = p.forcing.at(0.0, n);

  auto store = [&](Index k, const Vector& f) {
    const bool due = options.store_every > 0 ? (k % options.store_every == 0) : false;
    if (due || k == steps) {
      tr.stored_steps.push_back(k);
      tr.states.push_back(u);
      tr.auxiliaries.push_back(v);
      tr.forcings.push_back(f);
    }
  };
  auto record = [&](Index k, double t, double w, double wt, double res) {
    tr.times.push_back(t);
    tr.energy_m0.push_back(0.5 * u.dot(stepper.m0() * u));
    tr.energy_m2.push_back(0.5 * v.dot(stepper.m2() * v));
    tr.work.push_back(w);
    tr.work_trapezoid.push_back(wt);
    tr.state_norm.push_back(u.norm());
    tr.solve_residual.push_back(res);
    if (tr.first_nonzero_step < 0 && (u.array() != 0.0).any()) tr.first_nonzero_step = k;
    if (options.observer) options.observer(k, t, u, v);
  };

  record(0, 0.0, 0.0, 0.0, 0.0);
  store(0, f_prev);
  for (Index k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t1 = static_cast<double>(k + 1) * dt;
    const Vector u_old = u;
    const Vector f_step = p.forcing.at(scheme == Scheme::midpoint ? t + 0.5 * dt : t1, n);
    stepper.step(u, v, f_step);
    const Vector f_next = p.forcing.at(t1, n);
    const double w = scheme == Scheme::midpoint ? dt * 0.5 * (u_old + u).dot(f_step) : dt * u.dot(f_step);
    const double wt = 0.5 * dt * (u_old.dot(f_prev) + u.dot(f_next));
    record(k + 1, t1, w, wt, stepper.last_residual());
    store(k + 1, f_next);
    f_prev = f_next;
  }
  return tr;
}

double energy(const EvoProblem& p, const Vector& u, const Vector& v) {
  return 0.5 * u.dot(p.m0.to_sparse() * u) + 0.5 * v.dot(p.m2.to_sparse() * v);
}

double energy_balance_residual(const Trajectory& traj, Index k_a, Index k_b, Quadrature q) {
  if (k_a < 0 || k_b > traj.steps || k_a > k_b) throw std::out_of_range("energy_balance_residual: bad step range");
  const auto& w = q == Quadrature::scheme ? traj.work : traj.work_trapezoid;
  double sum = 0.0;
  for (Index k = k_a + 1; k <= k_b; ++k) sum += w[k];
  return std::abs(traj.energy(k_b) - traj.energy(k_a) - sum);
}

double weighted_norm(const std::vector<double>& times, const std::vector<Vector>& values, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (times.size() != values.size()) throw ShapeError("weighted_norm: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double a = std::exp(-2.0 * rho * times[k - 1]) * values[k - 1].squaredNorm();
    const double b = std::exp(-2.0 * rho * times[k]) * values[k].squaredNorm();
    acc += 0.5 * (times[k] - times[k - 1]) * (a + b);
  }
  return std::sqrt(acc);
}

double weighted_norm(const std::vector<double>& times, const std::vector<double>& values, double rho) {
  std::vector<Vector> v;
  v.reserve(values.size());
  for (double x : values) v.push_back(Vector::Constant(1, x));
  return weighted_norm(times, v, rho);
}

double weighted_norm(const Trajectory& traj, double rho) {
  std::vector<double> t;
  for (Index k : traj.stored_steps) t.push_back(traj.times[k]);
  return weighted_norm(t, traj.states, rho);
}

std::vector<Vector> antiderivative(const std::vector<double>& times, const std::vector<Vector>& values) {
  if (times.size() != values.size()) throw ShapeError("antiderivative: size mismatch");
  std::vector<Vector> out;
  out.reserve(values.size());
  if (values.empty()) return out;
  out.push_back(Vector::Zero(values[0].size()));
  for (std::size_t k = 1; k < values.size(); ++k)
    out.push_back(out.back() + 0.5 * (times[k] - times[k - 1]) * (values[k - 1] + values[k]));
  return out;
}

std::vector<double> antiderivative(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) throw ShapeError("antiderivative: size mismatch");
  std::vector<double> out;
  out.reserve(values.size());
  if (values.empty()) return out;
  out.push_back(0.0);
  for (std::size_t k = 1; k < values.size(); ++k)
    out.push_back(out.back() + 0.5 * (times[k] - times[k - 1]) * (values[k - 1] + values[k]));
  return out;
}

BlockConservedQuantity::BlockConservedQuantity(const EvoProblem& p, const std::string& kinetic, const std::string& flux) {
  const auto ki = p.m0.row_index(kinetic);
  const auto fi = p.m0.row_index(flux);
  if (p.m0.has_block(ki, fi) || p.m0.has_block(fi, ki))
    throw PreconditionError("block conserved quantity needs M0 block-diagonal on (kinetic, flux)");
  k_off_ = p.m0.row_offset(ki);
  k_dim_ = p.m0.row_spaces()[ki].dim;
  m00_ = p.m0.sparse_block(ki, ki);
  g_ = -p.a.sparse_block(fi, ki);
  m11_.compute(p.m0.sparse_block(fi, fi));
  if (m11_.info() != Eigen::Success) throw SingularError("flux block of M0 could not be factorized");
}

double BlockConservedQuantity::operator()(const Vector& u, const Vector& v) const {
  const Vector u0 = u.segment(k_off_, k_dim_);
  const Vector gx = g_ * v.segment(k_off_, k_dim_);
  const Vector y = m11_.solve(gx);
  return 0.5 * u0.dot(m00_ * u0) + 0.5 * gx.dot(y);
}

}  // namespace evoel
