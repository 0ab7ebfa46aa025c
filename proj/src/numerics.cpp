#include "spcr/numerics.hpp"

#include "spcr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spcr {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Gram eigenvalues below this fraction of the largest are treated as zero.
constexpr double kGramRelTolerance = 1e-12;

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) fail(ErrorKind::InvalidData, std::string(what) + " contains non-finite entries");
}

}  // namespace

CenteredMatrix center_columns(const Matrix& raw) {
  require(raw.rows() >= 1 && raw.cols() >= 1, ErrorKind::InvalidData, "center_columns needs a non-empty matrix");
  require_finite(raw, "input matrix");
  Vector means = raw.colwise().mean().transpose();
  Matrix values = raw.rowwise() - means.transpose();
  return CenteredMatrix(std::move(values), std::move(means));
}

CenteredMatrix CenteredMatrix::from_centered(Matrix values, Vector means) {
  require(means.size() == values.cols(), ErrorKind::InvalidData, "column_means length does not match column count");
  require_finite(values, "centred matrix");
  const double scale = values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * static_cast<double>(values.rows()) * std::max(scale, 1e-300);
  for (Index j = 0; j < values.cols(); ++j) {
    if (std::abs(values.col(j).sum()) > tol)
      fail(ErrorKind::InvalidData, "column " + std::to_string(j) + " is not centred");
  }
  return CenteredMatrix(std::move(values), std::move(means));
}

CenteredMatrix CenteredMatrix::select_columns(const std::vector<Index>& cols) const {
  Matrix out(n_rows(), static_cast<Index>(cols.size()));
  Vector means(static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Index j = cols[k];
    require(j >= 0 && j < n_cols(), ErrorKind::InvalidArgument, "column index out of range");
    out.col(static_cast<Index>(k)) = values_.col(j);
    means(static_cast<Index>(k)) = means_(j);
  }
  return CenteredMatrix(std::move(out), std::move(means));
}

double RankTolerance::resolve(Index rows, Index cols, double sigma_max) const {
  if (absolute) return *absolute;
  return kEps * static_cast<double>(std::max(rows, cols)) * sigma_max;
}

void fix_column_signs(Matrix& v, Matrix* partner) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (v.rows() > 0 && v(arg, j) < 0.0) {
      v.col(j) *= -1.0;
      if (partner != nullptr) partner->col(j) *= -1.0;
    }
  }
}

ThinSvd thin_svd(const Matrix& x, const RankTolerance& policy) {
  require_finite(x, "svd input");
  ThinSvd out;
  if (x.size() == 0) return out;

  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "SVD did not converge");

  const Vector& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  out.tolerance = policy.resolve(x.rows(), x.cols(), sigma_max);

  Index r = 0;
  while (r < sv.size() && sv(r) > out.tolerance) ++r;
  out.rank = r;
  out.l = sv.head(r);
  out.u = svd.matrixU().leftCols(r);
  out.v = svd.matrixV().leftCols(r);
  fix_column_signs(out.v, &out.u);
  return out;
}

ThinSvd thin_svd(const CenteredMatrix& x, const RankTolerance& policy) { return thin_svd(x.values(), policy); }

Matrix inv_sqrt_gram(const Matrix& y_c) {
  require_finite(y_c, "response matrix");
  require(y_c.cols() >= 1, ErrorKind::DegenerateResponse, "response matrix has no columns");
  const Matrix gram = y_c.transpose() * y_c;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "eigendecomposition of Y^T Y failed");

  const Vector& lambda = eig.eigenvalues();  // ascending
  const double top = lambda(lambda.size() - 1);
  if (!(top > 0.0) || lambda(0) <= kGramRelTolerance * top)
    fail(ErrorKind::DegenerateResponse, "responses are linearly dependent (Y^T Y is singular)");

  const Matrix& q = eig.eigenvectors();
  Matrix m = q * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

Matrix inv_sqrt_gram(const CenteredMatrix& y_c) { return inv_sqrt_gram(y_c.values()); }

Spectral spectral_decompose(const Matrix& s) {
  require(s.rows() == s.cols(), ErrorKind::InvalidData, "spectral_decompose needs a square matrix");
  require_finite(s, "symmetric matrix");
  const double scale = s.size() == 0 ? 0.0 : s.cwiseAbs().maxCoeff();
  if (s.size() > 0 && (s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale))
    fail(ErrorKind::InvalidData, "matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "symmetric eigendecomposition failed");

  Spectral out;
  out.eigenvalues = eig.eigenvalues().reverse();
  out.eigenvectors = eig.eigenvectors().rowwise().reverse();
  fix_column_signs(out.eigenvectors);
  return out;
}

}  // namespace spcr
