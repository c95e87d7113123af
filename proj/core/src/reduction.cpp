#include "evoel/reduction.hpp"

#include "evoel/error.hpp"

#include <json.hpp>

#include <cmath>

namespace evoel {

using namespace tensor;

namespace {

double max_abs(const SparseMatrix& m) {
  double v = 0.0;
  for (Index k = 0; k < m.nonZeros(); ++k) v = std::max(v, std::abs(m.valuePtr()[k]));
  return v;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix half_sqrt2_lambda() { return std::sqrt(0.5) * iota_skew().transpose() * lambda_map(); }

}  // namespace

BlockAction BlockAction::identity(const BlockSpec& source) {
  return {"identity", Matrix::Identity(source.node_dim(), source.node_dim()), source};
}

BlockAction BlockAction::restrict(const BlockSpec& source, Subspace s) {
  BlockSpec t{source.label, source.order, s, source.role};
  Matrix node = t.embedding().transpose() * source.embedding();
  return {"restrict:" + std::string(to_string(s)), std::move(node), t};
}

BlockAction BlockAction::annihilate(const BlockSpec& source) {
  return {"annihilate", Matrix(0, source.node_dim()), BlockSpec{source.label, source.order, Subspace::zero, source.role}};
}

BlockAction BlockAction::lambda_unitary(const BlockSpec& source) {
  if (source.subspace != Subspace::full || (source.order != 1 && source.order != 2))
    throw ShapeError("lambda_unitary acts on full order-1 or order-2 blocks");
  const Matrix u = half_sqrt2_lambda();
  if (source.order == 1) return {"lambda_unitary", u, BlockSpec{source.label, 2, Subspace::skew, source.role}};
  return {"lambda_unitary", lift_first_slot(u), BlockSpec{source.label, 3, Subspace::skew, source.role}};
}

BlockAction BlockAction::user(const BlockSpec& source, Matrix node, BlockSpec target, std::string name) {
  if (node.cols() != source.node_dim() || node.rows() != target.node_dim())
    throw ShapeError("user block action has the wrong shape");
  return {std::move(name), std::move(node), std::move(target)};
}

BlockAction BlockAction::as(const std::string& label) const {
  BlockAction a = *this;
  a.target.label = label;
  return a;
}

BlockAction block_action_from_string(const BlockSpec& source, const std::string& name) {
  if (name == "identity") return BlockAction::identity(source);
  if (name == "annihilate") return BlockAction::annihilate(source);
  if (name == "lambda_unitary") return BlockAction::lambda_unitary(source);
  const std::string prefix = "restrict:";
  if (name.rfind(prefix, 0) == 0) return BlockAction::restrict(source, subspace_from_string(name.substr(prefix.size())));
  throw std::invalid_argument("unknown block action '" + name + "'");
}

ReductionMap::ReductionMap(StateLayout source, std::vector<BlockAction> actions)
    : source_(std::move(source)), actions_(std::move(actions)) {
  if (actions_.size() != source_.blocks().size()) throw ShapeError("reduction map needs one action per source block");
  std::vector<BlockSpec> targets;
  bool square = true;
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    const auto& a = actions_[i];
    const auto& src = source_.blocks()[i];
    if (a.node.cols() != src.node_dim() || a.node.rows() != a.target.node_dim())
      throw ShapeError("action on '" + src.label + "' has the wrong shape");
    const Matrix gram = a.node * a.node.transpose();
    if (max_abs(Matrix(gram - Matrix::Identity(gram.rows(), gram.cols()))) > 1e-12)
      throw ShapeError("action on '" + src.label + "' does not have orthonormal rows");
    square = square && a.node.rows() == a.node.cols();
    targets.push_back(a.target);
  }
  target_ = StateLayout(std::move(targets));
  kind_ = square ? Kind::relative : Kind::descendant;
}

std::vector<std::string> ReductionMap::annihilated() const {
  std::vector<std::string> out;
  for (const auto& a : actions_)
    if (a.annihilates()) out.push_back(a.target.label);
  return out;
}

BlockOperator ReductionMap::node_matrix() const {
  BlockOperator s(target_.node_spaces(), source_.node_spaces());
  for (std::size_t i = 0; i < actions_.size(); ++i)
    if (actions_[i].node.size() > 0) s.set_block(i, i, actions_[i].node);
  return s;
}

BlockOperator ReductionMap::grid_matrix(Index nodes) const {
  BlockOperator s(target_.grid_spaces(nodes), source_.grid_spaces(nodes));
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (actions_[i].node.size() == 0) continue;
    SparseMatrix k = kron_identity(nodes, actions_[i].node);
    if (k.rows() <= kDenseLimit && k.cols() <= kDenseLimit) s.set_block(i, i, Matrix(k));
    else s.set_block(i, i, std::move(k));
  }
  return s;
}

std::string_view to_string(ReductionMap::Kind k) { return k == ReductionMap::Kind::relative ? "relative" : "descendant"; }

DescendantProblem conjugate_problem(const EvoProblem& mother, const ReductionMap& map) {
  const Index nd = map.source().node_dim();
  if (nd == 0 || mother.size() % nd != 0) throw ShapeError("conjugate_problem: mother size does not match the map");
  const Index nodes = mother.size() / nd;
  const auto spaces = map.source().grid_spaces(nodes);
  for (const BlockOperator* m : {&mother.m0, &mother.m1, &mother.m2, &mother.a})
    if (m->row_spaces() != spaces || m->col_spaces() != spaces)
      throw ShapeError("conjugate_problem: mother blocks do not match the map's source layout");
  check_grad_div_pairs(mother.a);

  DescendantProblem d{mother, map, {}, map.grid_matrix(nodes), {}};
  EvoProblem& c = d.child;
  c.m0 = conjugate(mother.m0, d.s);
  c.m1 = conjugate(mother.m1, d.s);
  c.m2 = conjugate(mother.m2, d.s);

  c.a = BlockOperator::square(map.target().grid_spaces(nodes));
  const auto& blocks = map.source().blocks();
  for (const auto& [key, blk] : mother.a.blocks()) {
    const auto [i, j] = key;
    if (blocks[i].role == Role::kinetic && blocks[j].role == Role::flux) continue;  // partner of a flux row
    if (blocks[i].role != Role::flux || blocks[j].role != Role::kinetic)
      throw PreconditionError("A couples '" + blocks[i].label + "' and '" + blocks[j].label + "' of equal role");
    if (map.actions()[i].annihilates() || map.actions()[j].annihilates()) continue;
    const SparseMatrix si = d.s.sparse_block(i, i);
    const SparseMatrix sj = d.s.sparse_block(j, j);
    SparseMatrix l = si * mother.a.sparse_block(i, j) * SparseMatrix(sj.transpose());
    l.prune(0.0);
    if (l.nonZeros() == 0) continue;
    SparseMatrix lt = -SparseMatrix(l.transpose());
    c.a.set_block(i, j, std::move(l));
    c.a.set_block(j, i, std::move(lt));
  }

  c.forcing = mother.forcing.mapped(d.s.to_sparse());
  c.horizon = mother.horizon;
  c.onset = mother.onset;
  c.allow_indefinite_m2 = mother.allow_indefinite_m2;
  d.child_validity = validate(c.m0, c.m1, c.m2);
  return d;
}

MaterialLaw conjugate_law(const MaterialLaw& law, const ReductionMap& map) {
  if (law.layout().node_spaces() != map.source().node_spaces())
    throw ShapeError("conjugate_law: law layout does not match the map's source layout");
  const BlockOperator s = map.node_matrix();
  return MaterialLaw(map.target(), conjugate(law.m0(), s), conjugate(law.m1(), s), conjugate(law.m2(), s));
}

bool check_compatibility(const Matrix& a, const Matrix& b, double tol) {
  if (a.cols() != b.cols()) throw ShapeError("check_compatibility: A and B need the same column count");
  const Matrix lhs = (a * b.transpose()).transpose();
  const Matrix rhs = b * a.transpose();
  const double scale = std::max(max_abs(a) * max_abs(b) * static_cast<double>(std::max<Index>(a.cols(), 1)), 1e-300);
  return max_abs(Matrix(lhs - rhs)) <= tol * scale;
}

bool check_compatibility(const SparseMatrix& a, const SparseMatrix& b, double tol) {
  if (a.cols() != b.cols()) throw ShapeError("check_compatibility: A and B need the same column count");
  const SparseMatrix bt = b.transpose();
  const SparseMatrix at = a.transpose();
  const SparseMatrix lhs = SparseMatrix(a * bt).transpose();
  const SparseMatrix rhs = b * at;
  const double scale = std::max(max_abs(a) * max_abs(b) * static_cast<double>(std::max<Index>(a.cols(), 1)), 1e-300);
  return max_abs(SparseMatrix(lhs - rhs)) <= tol * scale;
}

bool check_compatibility(const BlockOperator& a, const BlockOperator& b, double tol) {
  return check_compatibility(a.to_sparse(), b.to_sparse(), tol);
}

DegenerateReduction degenerate_reduce(const Matrix& n0, const Matrix& m1, const Matrix& a, double rank_tol,
                                      double marginal_tol) {
  const Index n = n0.rows();
  if (n0.cols() != n || m1.rows() != n || m1.cols() != n || a.rows() != n || a.cols() != n)
    throw ShapeError("degenerate_reduce: N0, M1 and A must be square of equal size");
  if ((n0 - n0.transpose()).norm() > 1e-12 * n0.norm()) throw PreconditionError("N0 is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(n0);
  const Vector& lam = es.eigenvalues();
  const double smax = lam.cwiseAbs().maxCoeff();
  if (smax == 0.0) throw PreconditionError("N0 is zero");
  std::vector<Index> keep;
  for (Index k = 0; k < n; ++k) {
    if (lam(k) < -rank_tol * smax) throw PreconditionError("N0 is not positive semidefinite");
    if (lam(k) <= rank_tol * smax) continue;
    if (lam(k) <= marginal_tol * smax) throw PreconditionError("N0 is near-singular on its range (marginal)");
    keep.push_back(k);
  }
  DegenerateReduction r;
  r.rank = static_cast<Index>(keep.size());
  r.iota.resize(n, r.rank);
  for (Index c = 0; c < r.rank; ++c) r.iota.col(c) = es.eigenvectors().col(keep[c]);
  const Matrix reduced = r.iota.transpose() * n0 * r.iota;
  r.m0 = reduced.ldlt().solve(Matrix::Identity(r.rank, r.rank));
  r.m0 = 0.5 * (r.m0 + r.m0.transpose());
  r.m1 = r.iota.transpose() * m1 * r.iota;
  r.a = r.iota.transpose() * a * r.iota;
  r.a_skew = (r.a + r.a.transpose()).norm() <= 1e-12 * std::max(r.a.norm(), 1e-300);
  return r;
}

DegenerateReduction degenerate_reduce(const Matrix& n0, const BlockOperator& m1, const BlockOperator& a, double rank_tol,
                                      double marginal_tol) {
  return degenerate_reduce(n0, m1.to_dense(), a.to_dense(), rank_tol, marginal_tol);
}

DynamicsReport verify_descendant_dynamics(const DescendantProblem& d, const Forcing& f_child, double dt, Scheme scheme,
                                          double coupling_tol) {
  const SparseMatrix s = d.s.to_sparse();
  const SparseMatrix st = s.transpose();
  const SparseMatrix p = st * s;

  DynamicsReport rep;
  const char* names[] = {"M0", "M1", "M2"};
  const BlockOperator* ms[] = {&d.mother.m0, &d.mother.m1, &d.mother.m2};
  for (int i = 0; i < 3; ++i) {
    const SparseMatrix m = ms[i]->to_sparse();
    const double scale = max_abs(m);
    if (scale == 0.0) continue;
    const SparseMatrix sm = s * m;
    const double c = max_abs(SparseMatrix(sm - sm * p)) / scale;
    rep.coefficient_coupling = std::max(rep.coefficient_coupling, c);
    if (c > coupling_tol)
      throw PreconditionError(std::string(names[i]) + " couples ran(S^T) and ker(S) (relative size " + std::to_string(c) + ")");
  }
  {
    const SparseMatrix a = d.mother.a.to_sparse();
    const SparseMatrix ap = a * p;
    const double scale = max_abs(a);
    rep.a_invariance_defect = scale == 0.0 ? 0.0 : max_abs(SparseMatrix(ap - p * ap)) / scale;
  }

  EvoProblem child = d.child;
  child.forcing = f_child;
  EvoProblem mother = d.mother;
  mother.forcing = f_child.mapped(st);

  const Trajectory tc = run(child, dt, scheme);
  rep.steps = tc.steps;
  for (const auto& u : tc.states) rep.child_peak = std::max(rep.child_peak, u.norm());

  double worst = 0.0;
  RunOptions opts;
  opts.store_every = 0;
  opts.observer = [&](Index k, double, const Vector& u, const Vector&) {
    worst = std::max(worst, (s * u - tc.states[static_cast<std::size_t>(k)]).norm());
  };
  run(mother, dt, scheme, opts);
  rep.discrepancy = rep.child_peak > 0.0 ? worst / rep.child_peak : worst;
  return rep;
}

std::string reduction_report_json(const DescendantProblem& d, const std::vector<std::pair<std::string, double>>& identity_checks,
                                  const std::optional<DynamicsReport>& dynamics) {
  using nlohmann::json;
  json j;
  j["kind"] = std::string(to_string(d.map.kind()));
  j["annihilated"] = d.map.annihilated();
  json ids = json::object();
  for (const auto& [name, v] : identity_checks) ids[name] = v;
  j["identity_checks"] = ids;
  auto cls = [](const BlockOperator& m) {
    const auto c = classify(m);
    return json{{"symmetry", c.symmetry()}, {"definiteness", std::string(to_string(c.definiteness))}};
  };
  j["classification"] = {{"M0", cls(d.child.m0)}, {"M1", cls(d.child.m1)}, {"M2", cls(d.child.m2)}, {"A", cls(d.child.a)}};
  j["valid"] = d.child_validity.valid;
  j["reasons"] = d.child_validity.reasons;
  if (dynamics) {
    j["dynamics_discrepancy"] = dynamics->discrepancy;
    j["a_invariance_defect"] = dynamics->a_invariance_defect;
    j["coefficient_coupling"] = dynamics->coefficient_coupling;
    j["steps"] = dynamics->steps;
  } else {
    j["dynamics_discrepancy"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace evoel
