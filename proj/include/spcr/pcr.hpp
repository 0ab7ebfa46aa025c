#pragma once

#include "spcr/dimension.hpp"
#include "spcr/numerics.hpp"
#include "spcr/ranking.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spcr {

/// Fitted H-component PCR model on a ranked subset of m variables.
/// Holds everything needed to predict from raw p-dimensional data.
struct PcrModel {
  std::vector<Index> selected_indices;  // j_1..j_m, rank order
  Vector x_column_means;                // length p
  Matrix loadings;                      // m x H, orthonormal columns
  Matrix coefficients;                  // H x q
  Vector y_means;                       // q
  Index m = 0;
  Index h = 0;
  // Kept for the eigen-sum form of the predictor.
  Index n_train = 0;
  Vector eigenvalues;  // H leading eigenvalues of N^{-1} X_m^T X_m
  Matrix cross;        // m x q, X_m^T Y_c

  Index n_predictors() const noexcept { return x_column_means.size(); }
  Index n_responses() const noexcept { return y_means.size(); }
};

/// Number of components: fixed, or chosen by the kurtosis selector.
struct ComponentPolicy {
  std::optional<Index> fixed;  // unset means automatic
  DimensionOptions selector;

  static ComponentPolicy automatic(DimensionOptions opts = {}) { return {std::nullopt, std::move(opts)}; }
  static ComponentPolicy exactly(Index h) { return {h, {}}; }
};

struct FitResult {
  PcrModel model;
  std::optional<DimensionSelection> selection;
};

/// Fits B_r = (X~^T X~)^{-1} X~^T Y_c with X~ = X_m Gamma_H. Y is given raw;
/// its means are stored and added back at prediction time.
FitResult fit(const CenteredMatrix& x, const Matrix& y, const RankingResult& ranking, Index m,
              const ComponentPolicy& policy);

/// z_m^T Gamma_H B_r + y_means for each row of raw z (N' x p).
Matrix predict(const PcrModel& model, const Matrix& z);
Vector predict(const PcrModel& model, const Vector& z);

/// The same predictor written as (1/N) sum_j lambda_j^{-1} Y^T X_m g_j g_j^T z_m.
Matrix predict_eigen_sum(const PcrModel& model, const Matrix& z);

/// In-sample fitted values for the training rows of x.
Matrix fitted_values(const PcrModel& model, const CenteredMatrix& x);

/// Single-component supervised principal-component prediction
/// (u_1^T y) z_m^T v_1 / sqrt(d_1), plus the mean of y. Requires a Bair ranking.
Vector predict_spc_baseline(const CenteredMatrix& x, const Vector& y, const RankingResult& ranking, Index m,
                            const Matrix& z);

/// Root mean squared Euclidean row error.
double lse(const Matrix& y_hat, const Matrix& y);

enum class Method { Knb1PcH, Knb2PcH, BhptPcH, BhptPc1, NrPcH };

std::string_view to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view tag) noexcept;
const std::vector<Method>& all_methods();
bool uses_selector(Method m) noexcept;

enum class EvalMode { InSample, Holdout };
std::string_view to_string(EvalMode e) noexcept;

struct SweepRow {
  Method method = Method::Knb1PcH;
  Index m = 0;
  Index chosen_h = 0;
  double lse = 0.0;
  double wall_time_ms = 0.0;  // not deterministic; reporting only
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by method then m
  EvalMode eval = EvalMode::InSample;
  std::uint64_t seed = 0;
};

struct SweepOptions {
  std::vector<Method> methods;
  Index m_min = 2;
  Index m_max = 2;
  EvalMode eval = EvalMode::InSample;
  std::uint64_t seed = 0;
  DimensionOptions selector;
  /// Holdout data, raw. Required when eval == Holdout.
  std::optional<Matrix> x_holdout;
  std::optional<Matrix> y_holdout;
};

/// The ranking a method uses on (x, y): b1, b2, Bair, or natural order.
RankingResult method_ranking(Method method, const CenteredMatrix& x, const CenteredMatrix& y);

/// Evaluates every (method, m) cell. Methods that use the selector are capped
/// at m <= 50.
SweepResult sweep(const CenteredMatrix& x, const Matrix& y, const SweepOptions& opts);

}  // namespace spcr
