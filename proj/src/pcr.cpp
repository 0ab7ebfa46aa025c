#include "spcr/pcr.hpp"

#include "spcr/error.hpp"
#include "spcr/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace spcr {

namespace {

void check_response(const CenteredMatrix& x, const Matrix& y) {
  require(y.rows() == x.n_rows(), ErrorKind::InvalidArgument, "X and Y must have the same number of rows");
  require(y.cols() >= 1, ErrorKind::InvalidArgument, "Y needs at least one column");
  require(y.allFinite(), ErrorKind::InvalidData, "Y contains non-finite entries");
}

Matrix ranked_centered_input(const PcrModel& model, const Matrix& z) {
  if (z.cols() != model.n_predictors())
    fail(ErrorKind::InvalidArgument, "predictor data has " + std::to_string(z.cols()) + " columns, model expects " +
                                         std::to_string(model.n_predictors()));
  const Matrix centred = z.rowwise() - model.x_column_means.transpose();
  Matrix z_m(z.rows(), model.m);
  for (Index k = 0; k < model.m; ++k) z_m.col(k) = centred.col(model.selected_indices[static_cast<std::size_t>(k)]);
  return z_m;
}

}  // namespace

FitResult fit(const CenteredMatrix& x, const Matrix& y, const RankingResult& ranking, Index m,
              const ComponentPolicy& policy) {
  check_response(x, y);
  const RankedSubset subset = take_ranked_subset(x, ranking, m);
  const CenteredMatrix y_c = center_columns(y);

  FitResult out;
  Index h = 0;
  if (policy.fixed) {
    h = *policy.fixed;
    require(h >= 1 && h <= m, ErrorKind::InvalidArgument, "number of components must lie in [1, m]");
  } else {
    out.selection = select_dimension(subset.x, policy.selector);
    h = out.selection->chosen_h;
  }

  const SpheredPcs pcs = sphere_pcs(subset.x);
  if (h > pcs.k_max)
    fail(ErrorKind::NumericalFailure, "H = " + std::to_string(h) + " exceeds the rank of X_m (" +
                                          std::to_string(pcs.k_max) + ")");

  PcrModel& model = out.model;
  model.selected_indices = subset.indices;
  model.x_column_means = x.column_means();
  model.loadings = pcs.spectral.eigenvectors.leftCols(h);
  model.y_means = y_c.column_means();
  model.m = m;
  model.h = h;
  model.n_train = x.n_rows();
  model.eigenvalues = pcs.spectral.eigenvalues.head(h);
  model.cross = subset.x.values().transpose() * y_c.values();

  const Matrix reduced = subset.x.values() * model.loadings;
  Eigen::LLT<Matrix> gram(reduced.transpose() * reduced);
  if (gram.info() != Eigen::Success)
    fail(ErrorKind::NumericalFailure, "reduced Gram matrix of the principal components is singular");
  model.coefficients = gram.solve(reduced.transpose() * y_c.values());
  return out;
}

Matrix predict(const PcrModel& model, const Matrix& z) {
  const Matrix z_m = ranked_centered_input(model, z);
  return ((z_m * model.loadings) * model.coefficients).rowwise() + model.y_means.transpose();
}

Vector predict(const PcrModel& model, const Vector& z) {
  return predict(model, Matrix(z.transpose())).row(0).transpose();
}

Matrix predict_eigen_sum(const PcrModel& model, const Matrix& z) {
  require(model.n_train > 0 && model.eigenvalues.size() == model.h, ErrorKind::InvalidArgument,
          "model lacks the spectral terms for the eigen-sum predictor");
  const Matrix z_m = ranked_centered_input(model, z);
  const Vector inv = (static_cast<double>(model.n_train) * model.eigenvalues.array()).inverse().matrix();
  const Matrix weights = inv.asDiagonal() * (model.loadings.transpose() * model.cross);  // H x q
  return ((z_m * model.loadings) * weights).rowwise() + model.y_means.transpose();
}

Matrix fitted_values(const PcrModel& model, const CenteredMatrix& x) {
  require(x.n_cols() == model.n_predictors(), ErrorKind::InvalidArgument, "training data width does not match model");
  Matrix z_m(x.n_rows(), model.m);
  for (Index k = 0; k < model.m; ++k) z_m.col(k) = x.values().col(model.selected_indices[static_cast<std::size_t>(k)]);
  return ((z_m * model.loadings) * model.coefficients).rowwise() + model.y_means.transpose();
}

Vector predict_spc_baseline(const CenteredMatrix& x, const Vector& y, const RankingResult& ranking, Index m,
                            const Matrix& z) {
  require(ranking.scheme == Scheme::Bair, ErrorKind::InvalidArgument, "the baseline predictor uses a Bair ranking");
  require(y.size() == x.n_rows(), ErrorKind::InvalidArgument, "response length does not match the number of rows");
  require(z.cols() == x.n_cols(), ErrorKind::InvalidArgument, "predictor data width does not match training data");

  const RankedSubset subset = take_ranked_subset(x, ranking, m);
  const ThinSvd svd = thin_svd(subset.x);
  if (svd.rank < 1) fail(ErrorKind::DegenerateData, "leading eigenvalue of the ranked data is zero");

  const double y_mean = y.mean();
  const Vector y_c = y.array() - y_mean;
  const Matrix centred = z.rowwise() - x.column_means().transpose();
  Matrix z_m(z.rows(), m);
  for (Index k = 0; k < m; ++k) z_m.col(k) = centred.col(subset.indices[static_cast<std::size_t>(k)]);

  const double weight = svd.u.col(0).dot(y_c) / svd.l(0);
  return (weight * (z_m * svd.v.col(0))).array() + y_mean;
}

double lse(const Matrix& y_hat, const Matrix& y) {
  require(y_hat.rows() == y.rows() && y_hat.cols() == y.cols(), ErrorKind::InvalidArgument,
          "prediction and response shapes differ");
  require(y.rows() > 0, ErrorKind::InvalidArgument, "LSE needs at least one row");
  return std::sqrt((y_hat - y).squaredNorm() / static_cast<double>(y.rows()));
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Knb1PcH: return "knb1-pcH";
    case Method::Knb2PcH: return "knb2-pcH";
    case Method::BhptPcH: return "bhpt-pcH";
    case Method::BhptPc1: return "bhpt-pc1";
    case Method::NrPcH: return "nr-pcH";
  }
  return "?";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::Knb1PcH, Method::Knb2PcH, Method::BhptPcH, Method::BhptPc1,
                                           Method::NrPcH};
  return methods;
}

std::optional<Method> parse_method(std::string_view tag) noexcept {
  for (Method m : all_methods())
    if (to_string(m) == tag) return m;
  return std::nullopt;
}

bool uses_selector(Method m) noexcept { return m != Method::BhptPc1; }

std::string_view to_string(EvalMode e) noexcept { return e == EvalMode::InSample ? "in-sample" : "holdout"; }

RankingResult method_ranking(Method method, const CenteredMatrix& x, const CenteredMatrix& y) {
  switch (method) {
    case Method::Knb1PcH: return rank_with_scheme(x, y, Scheme::B1);
    case Method::Knb2PcH: return rank_with_scheme(x, y, Scheme::B2);
    case Method::BhptPcH:
    case Method::BhptPc1: return rank_with_scheme(x, y, Scheme::Bair);
    case Method::NrPcH: return rank_with_scheme(x, y, Scheme::Natural);
  }
  fail(ErrorKind::InvalidArgument, "unknown method");
}

SweepResult sweep(const CenteredMatrix& x, const Matrix& y, const SweepOptions& opts) {
  check_response(x, y);
  require(!opts.methods.empty(), ErrorKind::InvalidArgument, "sweep needs at least one method");
  const Index limit = std::min(x.n_rows(), x.n_cols());
  require(opts.m_min >= 2 && opts.m_min <= opts.m_max, ErrorKind::InvalidArgument, "m range must satisfy 2 <= A <= B");
  require(opts.m_max <= limit, ErrorKind::InvalidArgument,
          "m range exceeds min(N, p) = " + std::to_string(limit));
  for (Method method : opts.methods) {
    if ((method == Method::BhptPcH || method == Method::BhptPc1) && y.cols() != 1)
      fail(ErrorKind::UnsupportedResponse,
           std::string(to_string(method)) + " ranks with marginal scores and needs a univariate response");
  }
  if (opts.eval == EvalMode::Holdout) {
    require(opts.x_holdout.has_value() && opts.y_holdout.has_value(), ErrorKind::InvalidArgument,
            "holdout evaluation needs holdout X and Y");
    require(opts.x_holdout->cols() == x.n_cols() && opts.y_holdout->cols() == y.cols() &&
                opts.x_holdout->rows() == opts.y_holdout->rows(),
            ErrorKind::InvalidArgument, "holdout data shape does not match training data");
  }

  const CenteredMatrix y_c = center_columns(y);
  SweepResult out;
  out.eval = opts.eval;
  out.seed = opts.seed;

  std::vector<Method> methods = opts.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  for (Method method : methods) {
    const RankingResult ranking = method_ranking(method, x, y_c);
    for (Index m = opts.m_min; m <= opts.m_max; ++m) {
      if (uses_selector(method) && m > kMaxSelectorDimension) break;
      const auto start = std::chrono::steady_clock::now();
      ComponentPolicy policy;
      if (method == Method::BhptPc1) {
        policy = ComponentPolicy::exactly(1);
      } else {
        policy = ComponentPolicy::automatic(opts.selector);
        policy.selector.kurtosis.seed =
            derive_seed(opts.seed, {hash_tag(to_string(method)), static_cast<std::uint64_t>(m)});
      }
      const FitResult fitted = fit(x, y, ranking, m, policy);
      const double err = opts.eval == EvalMode::InSample
                             ? lse(fitted_values(fitted.model, x), y)
                             : lse(predict(fitted.model, *opts.x_holdout), *opts.y_holdout);
      const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
      out.rows.push_back(SweepRow{method, m, fitted.model.h, err, elapsed.count()});
    }
  }
  return out;
}

}  // namespace spcr
