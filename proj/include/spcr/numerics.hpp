#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace spcr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A data matrix whose columns have been centred, together with the means
/// that were removed. Carries X, Y and every ranked subset X_m.
class CenteredMatrix {
 public:
  CenteredMatrix() = default;

  const Matrix& values() const noexcept { return values_; }
  const Vector& column_means() const noexcept { return means_; }
  Index n_rows() const noexcept { return values_.rows(); }
  Index n_cols() const noexcept { return values_.cols(); }

  /// Columns `cols` (in the given order) of this matrix, means carried along.
  CenteredMatrix select_columns(const std::vector<Index>& cols) const;

  /// Wraps values that are already centred, e.g. a column subset.
  /// Throws InvalidData if any column mean exceeds the centring tolerance.
  static CenteredMatrix from_centered(Matrix values, Vector means);

 private:
  friend CenteredMatrix center_columns(const Matrix& raw);
  CenteredMatrix(Matrix values, Vector means) : values_(std::move(values)), means_(std::move(means)) {}

  Matrix values_;
  Vector means_;
};

CenteredMatrix center_columns(const Matrix& raw);

/// How the numerical rank of a thin SVD is decided.
struct RankTolerance {
  /// Absolute threshold on singular values. When unset, the default
  /// eps * max(N, d) * sigma_max is used.
  std::optional<double> absolute;

  double resolve(Index rows, Index cols, double sigma_max) const;
};

struct ThinSvd {
  Matrix u;  // N x r
  Vector l;  // r, nonincreasing, all above tolerance
  Matrix v;  // d x r
  Index rank = 0;
  double tolerance = 0.0;

  Matrix reconstruct() const { return u * l.asDiagonal() * v.transpose(); }
};

/// Thin SVD truncated to numerical rank. Each right singular vector is sign
/// fixed so that its largest-magnitude entry is positive.
ThinSvd thin_svd(const Matrix& x, const RankTolerance& policy = {});
ThinSvd thin_svd(const CenteredMatrix& x, const RankTolerance& policy = {});

/// (Y^T Y)^{-1/2} for a centred response matrix. Throws DegenerateResponse
/// when the responses are linearly dependent.
Matrix inv_sqrt_gram(const CenteredMatrix& y_c);
Matrix inv_sqrt_gram(const Matrix& y_c);

struct Spectral {
  Vector eigenvalues;   // nonincreasing
  Matrix eigenvectors;  // columns, orthogonal

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

/// Eigendecomposition of a symmetric matrix, eigenvalues in decreasing
/// order, eigenvector signs fixed (largest-magnitude entry positive).
Spectral spectral_decompose(const Matrix& s);

/// Flips the sign of column j of `v` (and of `partner`, if given) so that the
/// largest-magnitude entry of v.col(j) is positive. Ties go to the first index.
void fix_column_signs(Matrix& v, Matrix* partner = nullptr);

}  // namespace spcr
