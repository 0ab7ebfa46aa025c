#include "spcr/dimension.hpp"

#include "spcr/error.hpp"
#include "spcr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace spcr {

SpheredPcs sphere_pcs(const CenteredMatrix& x_m) {
  const Index n = x_m.n_rows();
  const Index m = x_m.n_cols();
  require(n >= 2 && m >= 1, ErrorKind::InvalidArgument, "sphere_pcs needs at least two rows and one column");

  // The SVD route keeps the sphered scores orthonormal to rounding even when
  // small eigenvalues make the covariance ill-conditioned.
  Eigen::BDCSVD<Matrix> svd(x_m.values(), Eigen::ComputeThinU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "SVD of ranked data did not converge");

  const Vector& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  const double tol = RankTolerance{}.resolve(n, m, sigma_max);
  Index r = 0;
  while (r < sv.size() && sv(r) > tol) ++r;
  if (r == 0) fail(ErrorKind::DegenerateData, "ranked data has no non-null principal direction");

  Matrix v = svd.matrixV();
  Matrix u = svd.matrixU().leftCols(r);
  Matrix v_head = v.leftCols(r);
  fix_column_signs(v_head, &u);
  v.leftCols(r) = v_head;
  if (m > r) {
    Matrix v_tail = v.rightCols(m - r);
    fix_column_signs(v_tail);
    v.rightCols(m - r) = v_tail;
  }

  SpheredPcs out;
  out.k_max = r;
  out.spectral.eigenvalues = Vector::Zero(m);
  out.spectral.eigenvalues.head(r) = sv.head(r).array().square() / static_cast<double>(n);
  out.spectral.eigenvectors = std::move(v);
  out.scores = std::sqrt(static_cast<double>(n)) * u;
  return out;
}

double projection_kurtosis(const Matrix& data, const Vector& alpha) {
  require(alpha.size() == data.cols(), ErrorKind::InvalidArgument, "direction length does not match data dimension");
  require(std::abs(alpha.norm() - 1.0) <= 1e-8, ErrorKind::InvalidArgument, "direction must have unit norm");
  const double n = static_cast<double>(data.rows());
  const Vector u = data * alpha;
  const double var = u.squaredNorm() / n;
  if (!(var >= 1e-14)) fail(ErrorKind::DegenerateDirection, "projected variance is zero");
  const double m4 = u.array().square().square().sum() / n;
  return std::abs(m4 / (var * var) - 3.0);
}

namespace {

struct RunResult {
  double beta = -1.0;
  Vector alpha;
  bool converged = false;
  int iterations = 0;  // executed
  double max_fourth = 0.0;  // largest standardised fourth moment seen
};

// Shifted fixed point for kurtosis extrema on sphered data. With g the
// gradient E[z (a^T z)^3], climbing uses a <- g / |g| (the fourth moment is
// convex) and descending uses a <- (shift a - g) / |.| with shift at least
// three times the largest fourth moment, which keeps each step monotone.
// Both share their fixed points with a <- E[z (a^T z)^3] - 3a.
RunResult run_fixed_point(const Matrix& z, Vector a, bool climb, double shift, const KurtosisOptions& opts) {
  const double n = static_cast<double>(z.rows());
  RunResult best;

  auto evaluate = [&](const Vector& w, Vector* grad) {
    const Vector u = z * w;
    const Eigen::ArrayXd u2 = u.array().square();
    const double var = u2.sum() / n;
    const double m4 = (u2 * u2).sum() / n;
    if (grad != nullptr) *grad = z.transpose() * (u2 * u.array()).matrix() / n;
    return std::pair{var, m4};
  };

  auto track = [&](const Vector& w, double var, double m4) {
    if (!(var >= 1e-14)) return;
    const double standardised = m4 / (var * var);
    best.max_fourth = std::max(best.max_fourth, standardised);
    const double beta = std::abs(standardised - 3.0);
    if (beta > best.beta) {
      best.beta = beta;
      best.alpha = w;
    }
  };

  Vector g;
  auto [var, m4] = evaluate(a, &g);
  track(a, var, m4);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    best.iterations = iter;
    Vector next = climb ? g : Vector(shift * a - g);
    const double norm = next.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    next /= norm;
    const double change = std::min((next - a).norm(), (next + a).norm());
    a = std::move(next);
    std::tie(var, m4) = evaluate(a, &g);
    track(a, var, m4);
    if (change < opts.tol) {
      best.converged = true;
      break;
    }
  }
  return best;
}

Vector random_unit(RandomStream& rng, Index k) {
  Vector v(k);
  for (Index i = 0; i < k; ++i) v(i) = rng.normal();
  const double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / norm;
}

}  // namespace

KurtosisResult maximize_kurtosis(const Matrix& data, const KurtosisOptions& opts) {
  const Index k = data.cols();
  require(k >= 1, ErrorKind::InvalidArgument, "kurtosis search needs at least one dimension");
  require(data.rows() >= 8, ErrorKind::InvalidArgument, "kurtosis search needs at least 8 samples");
  require(opts.n_restarts >= 0 && opts.max_iter >= 1 && opts.tol > 0.0, ErrorKind::InvalidArgument,
          "invalid kurtosis optimiser options");

  KurtosisResult out;
  if (k == 1) {
    out.alpha = Vector::Ones(1);
    out.beta_hat = projection_kurtosis(data, out.alpha);
    out.converged = true;
    out.n_restarts_used = 1;
    return out;
  }

  std::vector<Vector> starts;
  if (opts.warm_start) {
    require(opts.warm_start->size() == k, ErrorKind::InvalidArgument, "warm start has the wrong dimension");
    const double norm = opts.warm_start->norm();
    require(norm > 0.0, ErrorKind::InvalidArgument, "warm start must be non-zero");
    starts.push_back(*opts.warm_start / norm);
  }
  if (opts.include_axes)
    for (Index i = 0; i < k; ++i) starts.push_back(Vector::Unit(k, i));
  RandomStream rng(derive_seed(opts.seed, {hash_tag("kurtosis-restarts"), static_cast<std::uint64_t>(k)}));
  for (int i = 0; i < opts.n_restarts; ++i) starts.push_back(random_unit(rng, k));
  require(!starts.empty(), ErrorKind::InvalidArgument, "kurtosis search has no starting directions");

  std::vector<RunResult> climbs;
  climbs.reserve(starts.size());
  double max_fourth = 3.0;
  for (const Vector& s : starts) {
    climbs.push_back(run_fixed_point(data, s, true, 0.0, opts));
    max_fourth = std::max(max_fourth, climbs.back().max_fourth);
  }
  const double shift = 3.0 * max_fourth * (1.0 + 1e-6);

  // Deterministic reduction: highest beta wins, earlier start on ties, climb
  // before descent for the same start.
  bool have = false;
  auto consider = [&](const RunResult& r) {
    if (r.alpha.size() == 0) return;
    if (!have || r.beta > out.beta_hat) {
      have = true;
      out.beta_hat = r.beta;
      out.alpha = r.alpha;
      out.converged = r.converged;
      out.iterations = r.iterations;
    }
  };
  for (std::size_t i = 0; i < starts.size(); ++i) {
    consider(climbs[i]);
    consider(run_fixed_point(data, starts[i], false, shift, opts));
  }
  if (!have) fail(ErrorKind::DegenerateDirection, "every projection of the data has zero variance");
  out.n_restarts_used = static_cast<int>(starts.size());
  return out;
}

double ub_k(int k) {
  require(k >= 2 && k <= kMaxSelectorDimension, ErrorKind::InvalidArgument,
          "bias adjustment is tabulated for 2 <= k <= 50");
  const double kk = k;
  const double rho = (kk + 3.0) * (kk + 2.0) * (kk + 1.0) * kk / 24.0;
  const double mean_chi = std::sqrt(2.0) * std::exp(std::lgamma((rho + 1.0) / 2.0) - std::lgamma(rho / 2.0));
  return std::sqrt(0.6) * mean_chi;
}

double ub_k(int k, const UbTable& table) { return table(k); }

UbTable::UbTable(std::map<int, double> overrides) : overrides_(std::move(overrides)) {
  for (const auto& [k, v] : overrides_) {
    require(k >= 2 && k <= kMaxSelectorDimension, ErrorKind::InvalidArgument, "override k must lie in [2, 50]");
    require(std::isfinite(v), ErrorKind::InvalidArgument, "override values must be finite");
  }
}

double UbTable::operator()(int k) const {
  require(k >= 2 && k <= kMaxSelectorDimension, ErrorKind::InvalidArgument,
          "bias adjustment is tabulated for 2 <= k <= 50");
  if (auto it = overrides_.find(k); it != overrides_.end()) return it->second;
  return ub_k(k);
}

UbTable UbTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IngestError, "cannot open UB table " + path);
  std::map<int, double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    double k_raw = 0.0;
    double value = 0.0;
    std::string extra;
    if (!(fields >> k_raw >> value) || (fields >> extra))
      fail(ErrorKind::IngestError, path + ":" + std::to_string(line_no) + ": expected two numeric columns (k value)");
    const int k = static_cast<int>(k_raw);
    if (k != k_raw || k < 2 || k > kMaxSelectorDimension)
      fail(ErrorKind::IngestError, path + ":" + std::to_string(line_no) + ": k must be an integer in [2, 50]");
    if (!std::isfinite(value))
      fail(ErrorKind::IngestError, path + ":" + std::to_string(line_no) + ": value must be finite");
    if (!values.emplace(k, value).second)
      fail(ErrorKind::IngestError, path + ":" + std::to_string(line_no) + ": duplicate k " + std::to_string(k));
  }
  return UbTable(std::move(values));
}

DimensionSelection select_dimension(const CenteredMatrix& x_m, const DimensionOptions& opts) {
  const Index n = x_m.n_rows();
  const Index m = x_m.n_cols();
  require(m >= 2, ErrorKind::InvalidArgument, "dimension selection needs m >= 2");
  require(opts.k_cap >= 2 && opts.k_cap <= kMaxSelectorDimension, ErrorKind::InvalidArgument,
          "k_cap must lie in [2, 50]");

  const SpheredPcs pcs = sphere_pcs(x_m);
  const Index k_max = std::min({pcs.k_max, m, n - 1, static_cast<Index>(opts.k_cap)});
  if (k_max < 2) fail(ErrorKind::DegenerateData, "fewer than two non-null principal directions");

  DimensionSelection sel;
  sel.m = m;
  sel.n = n;
  sel.k_max = static_cast<int>(k_max);
  const double scale = std::sqrt(static_cast<double>(n) / 24.0);

  Vector previous = Vector::Ones(1);
  double best_score = 0.0;
  for (int k = 2; k <= k_max; ++k) {
    const Matrix data = pcs.scores.leftCols(k);
    KurtosisOptions ko = opts.kurtosis;
    ko.seed = derive_seed(opts.kurtosis.seed, {hash_tag("select-dimension"), static_cast<std::uint64_t>(k)});
    Vector warm = Vector::Zero(k);
    warm.head(k - 1) = previous;
    ko.warm_start = warm;

    KurtosisResult res = maximize_kurtosis(data, ko);
    if (!res.converged && opts.escalation > 1) {
      // The retry starts from the best direction so far, so it cannot lose ground.
      KurtosisOptions retry = ko;
      retry.max_iter = ko.max_iter * opts.escalation;
      retry.warm_start = res.alpha;
      res = maximize_kurtosis(data, retry);
    }

    const double ub = opts.ub(k);
    const double score = scale * res.beta_hat - ub;
    sel.beta_hats[k] = res.beta_hat;
    sel.ub_values[k] = ub;
    sel.scores[k] = score;
    sel.converged[k] = res.converged;
    if (k == 2 || score > best_score) {
      best_score = score;
      sel.argmax_k = k;
    }
    previous = res.alpha;
  }

  sel.chosen_h = sel.argmax_k;
  while (sel.chosen_h > 2 && !sel.converged[sel.chosen_h]) --sel.chosen_h;
  return sel;
}

}  // namespace spcr
