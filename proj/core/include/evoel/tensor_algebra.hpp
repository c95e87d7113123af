#pragma once

// Pointwise tensor calculus on covariant tensors of order <= 3 over R^3 with
// the Euclidean metric. Entries are stored row-major in slot order: slot 1 is
// the most significant index, so a 2-tensor t has t(i,j) at entry 3*i + j and
// a 3-tensor has t(i,j,k) at entry 9*i + 3*j + k.
//
// Subspace coordinates use fixed orthonormal bases (Frobenius inner product):
//
//   sym  (6): e11, e22, e33, (e23+e32)/s2, (e31+e13)/s2, (e12+e21)/s2
//   skew (3): (e23-e32)/s2, (e31-e13)/s2, (e12-e21)/s2
//   sym0 (5): (e11-e22)/s2, (e11+e22-2e33)/s6, (e23+e32)/s2,
//             (e31+e13)/s2, (e12+e21)/s2
//   trace(1): (e11+e22+e33)/s3
//
// with s2 = sqrt(2) etc. The embedding matrices iota_* have these basis
// tensors as columns, so iota^T iota = 1 and iota iota^T is the projector.
// With the skew basis above, (1/sqrt 2) iota_skew^T Lambda is the 3x3 identity.

#include <Eigen/Dense>

#include <string_view>

namespace evoel {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace evoel

namespace evoel::tensor {

/// Number of entries of an order-q tensor over R^3.
constexpr Index entries_of_order(int order) {
  Index n = 1;
  for (int i = 0; i < order; ++i) n *= 3;
  return n;
}

class TensorValue {
 public:
  explicit TensorValue(int order);
  TensorValue(int order, Vector entries);

  static TensorValue scalar(double value);
  static TensorValue vector(const Eigen::Vector3d& v);
  static TensorValue matrix(const Eigen::Matrix3d& m);

  int order() const { return order_; }
  const Vector& entries() const { return entries_; }
  Vector& entries() { return entries_; }

  double operator()(Index i) const { return entries_(i); }
  double at(Index i, Index j) const;
  double at(Index i, Index j, Index k) const;

  /// The order-2 tensor as a 3x3 matrix (row = first slot).
  Eigen::Matrix3d as_matrix() const;
  double frobenius_norm() const { return entries_.norm(); }

 private:
  int order_;
  Vector entries_;
};

/// Frobenius inner product; orders must agree.
double inner(const TensorValue& a, const TensorValue& b);

/// A linear map on order-2 tensors as a 9x9 matrix.
class SlotMap {
 public:
  SlotMap(Matrix matrix, bool projector);

  const Matrix& matrix() const { return matrix_; }
  bool is_projector() const { return projector_; }
  TensorValue apply(const TensorValue& t) const;

 private:
  Matrix matrix_;
  bool projector_;
};

enum class Subspace { full, sym, skew, sym0, trace, zero };

std::string_view to_string(Subspace s);
Subspace subspace_from_string(std::string_view name);

// 9x9 operator matrices.
Matrix identity_map();
Matrix sym_map();
Matrix skew_map();
Matrix volumetric_map();  // P = (1/3) trace* trace
Matrix sym0_map();
Matrix trace_row();       // 1x9
Matrix trace_star_col();  // 9x1

const SlotMap& sym_slot_map();
const SlotMap& skew_slot_map();
const SlotMap& sym0_slot_map();
const SlotMap& volumetric_slot_map();

/// Lambda: vectors -> 2-tensors, 9x3; Lambda(beta) = -(beta x).
Matrix lambda_map();
/// Lambda*: 2-tensors -> vectors, 3x9.
Matrix lambda_star_map();

Matrix iota_sym();    // 9x6
Matrix iota_skew();   // 9x3
Matrix iota_sym0();   // 9x5
Matrix iota_trace();  // 9x1

/// 1 (x) F: applies F to the trailing slots for each fixed first slot.
/// For F of shape m x k the result is 3m x 3k.
Matrix lift_first_slot(const Matrix& f);

/// Canonical embedding of the `s`-subspace of order-q tensors into the full
/// order-q space (columns = basis). For order 3 the subspace tag refers to the
/// last two slots, i.e. 1 (x) iota. Subspace::zero yields a 3^q x 0 matrix.
Matrix embedding(int order, Subspace s);
Index subspace_dim(int order, Subspace s);

TensorValue sym(const TensorValue& t);
TensorValue skew(const TensorValue& t);
TensorValue trace(const TensorValue& t);
TensorValue trace_star(const TensorValue& phi);
TensorValue proj_P(const TensorValue& t);
TensorValue sym0(const TensorValue& t);
TensorValue lambda_star(const TensorValue& t);
TensorValue lambda(const TensorValue& v);
TensorValue lift_last_two(const SlotMap& f, const TensorValue& t);

}  // namespace evoel::tensor
