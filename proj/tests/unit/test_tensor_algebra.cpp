#include "evoel/error.hpp"
#include "evoel/tensor_algebra.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace evoel;
using namespace evoel::tensor;
using evoel::testing::max_abs;

namespace {

TensorValue mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::Matrix3d m;
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return TensorValue::matrix(m);
}

TensorValue random2(std::mt19937_64& rng) { return TensorValue(2, testing::random_vector(rng, 9)); }

// Cross-product matrix b x, i.e. (b x) v = b cross v.
Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& b) {
  Eigen::Matrix3d m;
  m << 0, -b(2), b(1), b(2), 0, -b(0), -b(1), b(0), 0;
  return m;
}

}  // namespace

TEST_CASE("tensor values enforce their entry count") {
  CHECK_THROWS_AS(TensorValue(2, Vector::Zero(8)), ShapeError);
  CHECK_THROWS_AS(TensorValue(4), ShapeError);
  CHECK(TensorValue(3).entries().size() == 27);
  const TensorValue t = mat({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK(t.at(0, 1) == 2.0);
  CHECK(t.at(2, 0) == 7.0);
  CHECK(TensorValue(2).frobenius_norm() == 0.0);
}

TEST_CASE("sym and skew of a single off-diagonal entry") {
  const TensorValue t = mat({{0, 2, 0}, {0, 0, 0}, {0, 0, 0}});
  CHECK(sym(t).as_matrix() == mat({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}).as_matrix());
  CHECK(skew(t).as_matrix() == mat({{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}}).as_matrix());
  const TensorValue id = TensorValue::matrix(Eigen::Matrix3d::Identity());
  CHECK(sym(id).as_matrix() == Eigen::Matrix3d::Identity());
  CHECK(max_abs(skew(sym(t)).entries()) == 0.0);
}

TEST_CASE("sym and skew agree with matrix transposition on random tensors") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const TensorValue t = random2(rng);
    const Eigen::Matrix3d m = t.as_matrix();
    CHECK(max_abs(Matrix(sym(t).as_matrix() - 0.5 * (m + m.transpose()))) <= 1e-15);
    CHECK(max_abs(Matrix(skew(t).as_matrix() - 0.5 * (m - m.transpose()))) <= 1e-15);
    CHECK(max_abs(sym(t).entries() + skew(t).entries() - t.entries()) <= 1e-15);
    CHECK(max_abs(skew(skew(t)).entries() - skew(t).entries()) <= 1e-15);
  }
}

TEST_CASE("trace and its adjoint") {
  CHECK(trace(mat({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}))(0) == 6.0);
  CHECK(trace(mat({{0, 1, -2}, {-1, 0, 4}, {2, -4, 0}}))(0) == 0.0);
  CHECK(trace_star(TensorValue::scalar(1.0)).as_matrix() == Eigen::Matrix3d::Identity());
  CHECK(trace_star(TensorValue::scalar(0.0)).frobenius_norm() == 0.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int k = 0; k < 100; ++k) {
    const double phi = n(rng);
    const TensorValue t = random2(rng);
    CHECK(std::abs(trace(trace_star(TensorValue::scalar(phi)))(0) - 3.0 * phi) <= 1e-15 * (1 + std::abs(phi)));
    CHECK(std::abs(inner(trace_star(TensorValue::scalar(phi)), t) - phi * t.as_matrix().trace()) <= 1e-14);
  }
}

TEST_CASE("volumetric projector and trace-free symmetric part") {
  CHECK(proj_P(mat({{3, 0, 0}, {0, 0, 0}, {0, 0, 0}})).as_matrix() == Eigen::Matrix3d::Identity());
  CHECK(proj_P(mat({{1, 5, 0}, {0, -1, 0}, {0, 0, 0}})).frobenius_norm() == 0.0);
  CHECK(sym0(TensorValue::matrix(Eigen::Matrix3d::Identity())).frobenius_norm() <= 1e-15);
  CHECK(max_abs(sym0(mat({{1, 0, 0}, {0, -1, 0}, {0, 0, 0}})).entries() - mat({{1, 0, 0}, {0, -1, 0}, {0, 0, 0}}).entries()) <=
        1e-16);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const TensorValue t = random2(rng);
    CHECK(max_abs(proj_P(proj_P(t)).entries() - proj_P(t).entries()) <= 1e-15);
    const TensorValue s0 = sym0(t);
    CHECK(std::abs(s0.as_matrix().trace()) <= 1e-15);
    CHECK(max_abs(Matrix(s0.as_matrix() - s0.as_matrix().transpose())) <= 1e-15);
    // skew + sym0 + P = 1
    CHECK(max_abs(skew(t).entries() + sym0(t).entries() + proj_P(t).entries() - t.entries()) <= 1e-15);
  }
}

TEST_CASE("projector matrices are orthogonal projectors") {
  for (const Matrix& p : {sym_map(), skew_map(), sym0_map(), volumetric_map()}) {
    CHECK(max_abs(Matrix(p * p - p)) <= 1e-14);
    CHECK(max_abs(Matrix(p - p.transpose())) <= 1e-14);
  }
  CHECK(max_abs(Matrix(skew_map() + sym0_map() + volumetric_map() - identity_map())) <= 1e-15);
  CHECK_THROWS_AS(SlotMap(Matrix(2.0 * sym_map()), true), ShapeError);
  CHECK(sym_slot_map().is_projector());
}

TEST_CASE("Lambda* follows the component formula") {
  const TensorValue a = mat({{0, -1, 0}, {1, 0, 0}, {0, 0, 0}});
  CHECK(lambda_star(a).entries() == Eigen::Vector3d(0, 0, -2));
  CHECK(lambda_star(mat({{1, 2, 3}, {2, 4, 5}, {3, 5, 6}})).frobenius_norm() == 0.0);
  // skew alpha with (alpha23, alpha31, alpha12) = (a, b, c)
  const double x = 0.3, y = -1.7, z = 2.5;
  const TensorValue s = mat({{0, z, -y}, {-z, 0, x}, {y, -x, 0}});
  CHECK(max_abs(lambda_star(s).entries() - 2.0 * Vector(Eigen::Vector3d(x, y, z))) <= 1e-15);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Matrix3d m = random2(rng).as_matrix();
    const Eigen::Vector3d expect(m(1, 2) - m(2, 1), m(2, 0) - m(0, 2), m(0, 1) - m(1, 0));
    CHECK(max_abs(lambda_star(TensorValue::matrix(m)).entries() - Vector(expect)) <= 1e-15);
  }
}

TEST_CASE("Lambda is minus the cross-product matrix and adjoint to Lambda*") {
  CHECK(lambda(TensorValue::vector({1, 0, 0})).as_matrix() == mat({{0, 0, 0}, {0, 0, 1}, {0, -1, 0}}).as_matrix());
  CHECK(lambda(TensorValue::vector({0, 0, 0})).frobenius_norm() == 0.0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d b = testing::random_vector(rng, 3);
    const TensorValue a = random2(rng);
    CHECK(max_abs(Matrix(lambda(TensorValue::vector(b)).as_matrix() + cross_matrix(b))) <= 1e-15);
    const double lhs = inner(lambda(TensorValue::vector(b)), a);
    const double rhs = b.dot(Eigen::Vector3d(lambda_star(a).entries()));
    CHECK(std::abs(lhs - rhs) <= 1e-15 * (1 + std::abs(lhs)) * 10);
  }
}

TEST_CASE("Lambda identities on skew tensors") {
  const Matrix ls = lambda_star_map();
  const Matrix l = lambda_map();
  CHECK(max_abs(Matrix(ls * sym_map())) <= 1e-15);
  CHECK(max_abs(Matrix(sym_map() * l)) <= 1e-15);
  CHECK(max_abs(Matrix(l * ls - 2.0 * skew_map())) <= 1e-14);
  const Matrix u = std::sqrt(0.5) * ls * iota_skew();
  CHECK(max_abs(Matrix(u.transpose() * u - Matrix::Identity(3, 3))) <= 1e-15);
  // with the chosen skew basis the unitary is the identity
  CHECK(max_abs(Matrix(std::sqrt(0.5) * iota_skew().transpose() * l - Matrix::Identity(3, 3))) <= 1e-15);
}

TEST_CASE("embeddings are orthonormal and span the right subspaces") {
  struct Case {
    Matrix iota;
    Matrix projector;
    Index dim;
  };
  for (const auto& c : {Case{iota_sym(), sym_map(), 6}, Case{iota_skew(), skew_map(), 3}, Case{iota_sym0(), sym0_map(), 5},
                        Case{iota_trace(), volumetric_map(), 1}}) {
    CHECK(c.iota.cols() == c.dim);
    CHECK(max_abs(Matrix(c.iota.transpose() * c.iota - Matrix::Identity(c.dim, c.dim))) <= 1e-15);
    CHECK(max_abs(Matrix(c.iota * c.iota.transpose() - c.projector)) <= 1e-15);
  }
  CHECK(embedding(3, Subspace::skew).rows() == 27);
  CHECK(embedding(3, Subspace::skew).cols() == 9);
  CHECK(embedding(2, Subspace::zero).cols() == 0);
  CHECK(subspace_dim(3, Subspace::sym0) == 15);
  CHECK(subspace_from_string("sym0") == Subspace::sym0);
  CHECK_THROWS_AS(subspace_from_string("bogus"), ShapeError);
}

TEST_CASE("1 (x) F acts on the last two slots") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    const TensorValue t(3, testing::random_vector(rng, 27));
    CHECK(lift_last_two(SlotMap(identity_map(), true), t).entries() == t.entries());
    const Vector split = lift_last_two(sym_slot_map(), t).entries() + lift_last_two(skew_slot_map(), t).entries();
    CHECK(max_abs(split - t.entries()) <= 1e-15);
    // oracle: apply to each first-slot slice
    const TensorValue r = lift_last_two(skew_slot_map(), t);
    for (Index x = 0; x < 3; ++x)
      for (Index y = 0; y < 3; ++y)
        for (Index z = 0; z < 3; ++z)
          CHECK(std::abs(r.at(x, y, z) - 0.5 * (t.at(x, y, z) - t.at(x, z, y))) <= 1e-15);
  }
  Vector symmetric_last(27);
  for (Index x = 0; x < 3; ++x)
    for (Index y = 0; y < 3; ++y)
      for (Index z = 0; z < 3; ++z) symmetric_last(9 * x + 3 * y + z) = static_cast<double>(x + y * z + z * y);
  CHECK(lift_last_two(skew_slot_map(), TensorValue(3, symmetric_last)).frobenius_norm() == 0.0);
}
