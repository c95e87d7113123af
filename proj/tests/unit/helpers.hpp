#pragma once

#include "evoel/tensor_algebra.hpp"

#include <random>

namespace evoel::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n) { return random_matrix(rng, n, 1); }

inline Matrix random_spd(std::mt19937_64& rng, Index n, double shift = 0.5) {
  const Matrix a = random_matrix(rng, n, n);
  return a * a.transpose() / static_cast<double>(n) + shift * Matrix::Identity(n, n);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace evoel::testing
