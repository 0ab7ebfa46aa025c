#pragma once

#include "spcr/numerics.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace spcr {

/// Principal components of X_m scaled to identity sample covariance
/// (normalised by N), ordered by decreasing eigenvalue.
struct SpheredPcs {
  Matrix scores;      // N x k_max
  Spectral spectral;  // of N^{-1} X_m^T X_m
  Index k_max = 0;    // principal directions above the rank tolerance
};

SpheredPcs sphere_pcs(const CenteredMatrix& x_m);

/// |mean((a^T z)^4) / (a^T S a)^2 - 3| for centred data z and unit a.
double projection_kurtosis(const Matrix& data, const Vector& alpha);

struct KurtosisOptions {
  int n_restarts = 10;
  int max_iter = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::optional<Vector> warm_start;
  bool include_axes = true;  // canonical axes join the start pool
};

struct KurtosisResult {
  double beta_hat = 0.0;
  Vector alpha;
  bool converged = false;
  int n_restarts_used = 0;
  int iterations = 0;  // iterations of the winning run
};

/// Maximises the kurtosis index over the unit sphere. Every start (warm
/// start, canonical axes, random directions) is run twice: once climbing the
/// fourth moment and once descending it, so both super- and sub-Gaussian
/// extrema are found.
KurtosisResult maximize_kurtosis(const Matrix& data, const KurtosisOptions& opts = {});

/// Bias-adjustment constants, with optional user overrides.
class UbTable {
 public:
  UbTable() = default;
  explicit UbTable(std::map<int, double> overrides);

  /// Reads a whitespace-separated two-column table (k value). Lines starting
  /// with '#' are ignored.
  static UbTable load(const std::string& path);

  double operator()(int k) const;
  const std::map<int, double>& overrides() const noexcept { return overrides_; }

 private:
  std::map<int, double> overrides_;
};

inline constexpr int kMaxSelectorDimension = 50;

/// sqrt(0.6) * E[chi_rho] with rho = C(k+3, 4). Valid for 2 <= k <= 50.
double ub_k(int k);
double ub_k(int k, const UbTable& table);

struct DimensionOptions {
  KurtosisOptions kurtosis;
  UbTable ub;
  int k_cap = kMaxSelectorDimension;
  /// Iteration multiplier for the retry when a dimension fails to converge.
  int escalation = 4;
};

struct DimensionSelection {
  Index m = 0;
  Index n = 0;
  std::map<int, double> scores;     // I_k
  std::map<int, double> beta_hats;  // beta_k
  std::map<int, double> ub_values;
  std::map<int, bool> converged;
  int argmax_k = 0;   // raw argmax of I_k
  int chosen_h = 0;   // after stepping down past non-converged dimensions
  int k_max = 0;
};

/// Picks the number of principal components H(m) for the ranked data X_m
/// by the bias-adjusted kurtosis criterion.
DimensionSelection select_dimension(const CenteredMatrix& x_m, const DimensionOptions& opts = {});

}  // namespace spcr
