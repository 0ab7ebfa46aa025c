#pragma once

#include "spcr/numerics.hpp"
#include "spcr/rng.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace spcr::test {

inline Matrix gaussian(Index rows, Index cols, RandomStream& rng) {
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
  return out;
}

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  RandomStream rng(seed);
  return gaussian(rows, cols, rng);
}

// Correlated predictors: a random mixing of independent columns plus an offset,
// so centring matters and the variables are not exchangeable.
inline Matrix correlated(Index rows, Index cols, RandomStream& rng) {
  const Matrix mix = gaussian(cols, cols, rng) + Matrix::Identity(cols, cols) * 2.0;
  Matrix out = gaussian(rows, cols, rng) * mix;
  for (Index j = 0; j < cols; ++j) out.col(j).array() += rng.normal() * 3.0;
  return out;
}

// Symmetric inverse square root through a plain eigendecomposition.
inline Matrix oracle_inv_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

inline double abs_cosine(const Vector& a, const Vector& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

// Raw-moment kurtosis index of a projection, written out directly.
inline double oracle_kurtosis(const Matrix& z, const Vector& a) {
  const Vector u = z * a;
  const double mean = u.mean();
  double m2 = 0.0;
  double m4 = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    const double d = u(i) - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(u.size());
  m2 /= n;
  m4 /= n;
  return std::abs(m4 / (m2 * m2) - 3.0);
}

}  // namespace spcr::test
