#include "evoel/tensor_algebra.hpp"

#include "evoel/error.hpp"

#include <cmath>
#include <string>

namespace evoel::tensor {

namespace {

constexpr Index idx2(Index i, Index j) { return 3 * i + j; }

void require_order(const TensorValue& t, int order, const char* op) {
  if (t.order() != order) {
    throw ShapeError(std::string(op) + ": expected order " + std::to_string(order) +
                     ", got " + std::to_string(t.order()));
  }
}

Vector flatten(const Eigen::Matrix3d& m) {
  Vector v(9);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) v(idx2(i, j)) = m(i, j);
  return v;
}

// Unit-norm basis tensor from a 3x3 pattern.
Vector basis(const Eigen::Matrix3d& pattern) {
  Vector v = flatten(pattern);
  return v / v.norm();
}

Eigen::Matrix3d unit(Index i, Index j) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(i, j) = 1.0;
  return m;
}

}  // namespace

TensorValue::TensorValue(int order) : TensorValue(order, Vector::Zero(entries_of_order(order))) {}

TensorValue::TensorValue(int order, Vector entries) : order_(order), entries_(std::move(entries)) {
  if (order < 0 || order > 3) throw ShapeError("TensorValue: order must be in {0,1,2,3}");
  if (entries_.size() != entries_of_order(order)) {
    throw ShapeError("TensorValue: expected " + std::to_string(entries_of_order(order)) +
                     " entries, got " + std::to_string(entries_.size()));
  }
}

TensorValue TensorValue::scalar(double value) { return TensorValue(0, Vector::Constant(1, value)); }

TensorValue TensorValue::vector(const Eigen::Vector3d& v) { return TensorValue(1, Vector(v)); }

TensorValue TensorValue::matrix(const Eigen::Matrix3d& m) { return TensorValue(2, flatten(m)); }

double TensorValue::at(Index i, Index j) const {
  if (order_ != 2) throw ShapeError("TensorValue::at(i,j) needs an order-2 tensor");
  return entries_(idx2(i, j));
}

double TensorValue::at(Index i, Index j, Index k) const {
  if (order_ != 3) throw ShapeError("TensorValue::at(i,j,k) needs an order-3 tensor");
  return entries_(9 * i + 3 * j + k);
}

Eigen::Matrix3d TensorValue::as_matrix() const {
  if (order_ != 2) throw ShapeError("TensorValue::as_matrix needs an order-2 tensor");
  Eigen::Matrix3d m;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) m(i, j) = entries_(idx2(i, j));
  return m;
}

double inner(const TensorValue& a, const TensorValue& b) {
  if (a.order() != b.order()) throw ShapeError("inner: order mismatch");
  return a.entries().dot(b.entries());
}

SlotMap::SlotMap(Matrix matrix, bool projector) : matrix_(std::move(matrix)), projector_(projector) {
  if (matrix_.rows() != 9 || matrix_.cols() != 9) throw ShapeError("SlotMap: expected a 9x9 matrix");
  if (projector_) {
    const double idem = (matrix_ * matrix_ - matrix_).norm();
    const double symm = (matrix_ - matrix_.transpose()).norm();
    if (idem > 1e-12 || symm > 1e-12) throw ShapeError("SlotMap: flagged projector is not an orthogonal projector");
  }
}

TensorValue SlotMap::apply(const TensorValue& t) const {
  require_order(t, 2, "SlotMap::apply");
  return TensorValue(2, matrix_ * t.entries());
}

std::string_view to_string(Subspace s) {
  switch (s) {
    case Subspace::full: return "full";
    case Subspace::sym: return "sym";
    case Subspace::skew: return "skew";
    case Subspace::sym0: return "sym0";
    case Subspace::trace: return "trace";
    case Subspace::zero: return "zero";
  }
  return "full";
}

Subspace subspace_from_string(std::string_view name) {
  if (name == "full") return Subspace::full;
  if (name == "sym") return Subspace::sym;
  if (name == "skew") return Subspace::skew;
  if (name == "sym0") return Subspace::sym0;
  if (name == "trace") return Subspace::trace;
  if (name == "zero") return Subspace::zero;
  throw ShapeError("unknown subspace tag '" + std::string(name) + "'");
}

Matrix identity_map() { return Matrix::Identity(9, 9); }

Matrix sym_map() {
  Matrix m = Matrix::Zero(9, 9);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      m(idx2(i, j), idx2(i, j)) += 0.5;
      m(idx2(i, j), idx2(j, i)) += 0.5;
    }
  return m;
}

Matrix skew_map() {
  Matrix m = Matrix::Zero(9, 9);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      m(idx2(i, j), idx2(i, j)) += 0.5;
      m(idx2(i, j), idx2(j, i)) -= 0.5;
    }
  return m;
}

Matrix trace_row() {
  Matrix r = Matrix::Zero(1, 9);
  for (Index i = 0; i < 3; ++i) r(0, idx2(i, i)) = 1.0;
  return r;
}

Matrix trace_star_col() { return trace_row().transpose(); }

Matrix volumetric_map() { return trace_star_col() * trace_row() / 3.0; }

Matrix sym0_map() { return (identity_map() - volumetric_map()) * sym_map(); }

const SlotMap& sym_slot_map() {
  static const SlotMap m(sym_map(), true);
  return m;
}

const SlotMap& skew_slot_map() {
  static const SlotMap m(skew_map(), true);
  return m;
}

const SlotMap& sym0_slot_map() {
  static const SlotMap m(sym0_map(), true);
  return m;
}

const SlotMap& volumetric_slot_map() {
  static const SlotMap m(volumetric_map(), true);
  return m;
}

Matrix lambda_star_map() {
  // (a23 - a32, a31 - a13, a12 - a21)
  Matrix m = Matrix::Zero(3, 9);
  m(0, idx2(1, 2)) = 1.0;
  m(0, idx2(2, 1)) = -1.0;
  m(1, idx2(2, 0)) = 1.0;
  m(1, idx2(0, 2)) = -1.0;
  m(2, idx2(0, 1)) = 1.0;
  m(2, idx2(1, 0)) = -1.0;
  return m;
}

Matrix lambda_map() {
  // -Lambda(beta) = beta x = [[0,-b3,b2],[b3,0,-b1],[-b2,b1,0]]
  Matrix m = Matrix::Zero(9, 3);
  m(idx2(0, 1), 2) = 1.0;
  m(idx2(0, 2), 1) = -1.0;
  m(idx2(1, 0), 2) = -1.0;
  m(idx2(1, 2), 0) = 1.0;
  m(idx2(2, 0), 1) = 1.0;
  m(idx2(2, 1), 0) = -1.0;
  return m;
}

Matrix iota_sym() {
  Matrix m(9, 6);
  m.col(0) = basis(unit(0, 0));
  m.col(1) = basis(unit(1, 1));
  m.col(2) = basis(unit(2, 2));
  m.col(3) = basis(unit(1, 2) + unit(2, 1));
  m.col(4) = basis(unit(2, 0) + unit(0, 2));
  m.col(5) = basis(unit(0, 1) + unit(1, 0));
  return m;
}

Matrix iota_skew() {
  Matrix m(9, 3);
  m.col(0) = basis(unit(1, 2) - unit(2, 1));
  m.col(1) = basis(unit(2, 0) - unit(0, 2));
  m.col(2) = basis(unit(0, 1) - unit(1, 0));
  return m;
}

Matrix iota_sym0() {
  Matrix m(9, 5);
  m.col(0) = basis(unit(0, 0) - unit(1, 1));
  m.col(1) = basis(unit(0, 0) + unit(1, 1) - 2.0 * unit(2, 2));
  m.col(2) = basis(unit(1, 2) + unit(2, 1));
  m.col(3) = basis(unit(2, 0) + unit(0, 2));
  m.col(4) = basis(unit(0, 1) + unit(1, 0));
  return m;
}

Matrix iota_trace() { return trace_star_col() / std::sqrt(3.0); }

Matrix lift_first_slot(const Matrix& f) {
  Matrix out = Matrix::Zero(3 * f.rows(), 3 * f.cols());
  for (Index d = 0; d < 3; ++d) out.block(d * f.rows(), d * f.cols(), f.rows(), f.cols()) = f;
  return out;
}

Index subspace_dim(int order, Subspace s) {
  if (s == Subspace::zero) return 0;
  if (s == Subspace::full) return entries_of_order(order);
  if (order < 2) throw ShapeError("subspace tags other than full/zero need order >= 2");
  Index base = 0;
  switch (s) {
    case Subspace::sym: base = 6; break;
    case Subspace::skew: base = 3; break;
    case Subspace::sym0: base = 5; break;
    case Subspace::trace: base = 1; break;
    default: break;
  }
  return order == 2 ? base : 3 * base;
}

Matrix embedding(int order, Subspace s) {
  const Index full = entries_of_order(order);
  if (s == Subspace::full) return Matrix::Identity(full, full);
  if (s == Subspace::zero) return Matrix::Zero(full, 0);
  if (order < 2 || order > 3) throw ShapeError("embedding: subspace tags need order 2 or 3");
  Matrix iota;
  switch (s) {
    case Subspace::sym: iota = iota_sym(); break;
    case Subspace::skew: iota = iota_skew(); break;
    case Subspace::sym0: iota = iota_sym0(); break;
    case Subspace::trace: iota = iota_trace(); break;
    default: break;
  }
  return order == 2 ? iota : lift_first_slot(iota);
}

TensorValue sym(const TensorValue& t) { return sym_slot_map().apply(t); }

TensorValue skew(const TensorValue& t) { return skew_slot_map().apply(t); }

TensorValue trace(const TensorValue& t) {
  require_order(t, 2, "trace");
  return TensorValue::scalar((trace_row() * t.entries())(0));
}

TensorValue trace_star(const TensorValue& phi) {
  require_order(phi, 0, "trace_star");
  return TensorValue(2, trace_star_col() * phi.entries()(0));
}

TensorValue proj_P(const TensorValue& t) { return volumetric_slot_map().apply(t); }

TensorValue sym0(const TensorValue& t) { return sym0_slot_map().apply(t); }

TensorValue lambda_star(const TensorValue& t) {
  require_order(t, 2, "lambda_star");
  return TensorValue(1, lambda_star_map() * t.entries());
}

TensorValue lambda(const TensorValue& v) {
  require_order(v, 1, "lambda");
  return TensorValue(2, lambda_map() * v.entries());
}

TensorValue lift_last_two(const SlotMap& f, const TensorValue& t) {
  require_order(t, 3, "lift_last_two");
  return TensorValue(3, lift_first_slot(f.matrix()) * t.entries());
}

}  // namespace evoel::tensor
