#include "spcr/dimension.hpp"
#include "spcr/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace spcr;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("spcr_unit_" + name);
  std::ofstream(path) << text;
  return path.string();
}

double grid_max_2d(const Matrix& z) {
  double best = 0.0;
  for (int i = 0; i < 3600; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 3600.0;
    Vector a(2);
    a << std::cos(t), std::sin(t);
    best = std::max(best, test::oracle_kurtosis(z, a));
  }
  return best;
}

// Independent sources of assorted shapes, mixed.
Matrix mixed_sources(Index n, Index k, RandomStream& rng) {
  Matrix s(n, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < n; ++i) {
      switch (j % 3) {
        case 0: s(i, j) = rng.uniform(); break;
        case 1: s(i, j) = rng.exponential(1.0); break;
        default: s(i, j) = rng.normal(); break;
      }
    }
  return s * test::gaussian(k, k, rng);
}

}  // namespace

TEST_CASE("sphered principal components have identity covariance") {
  RandomStream rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 20 + rng.below(80);
    const Index m = 2 + rng.below(15);
    const CenteredMatrix x = center_columns(test::correlated(n, m, rng));
    const SpheredPcs pcs = sphere_pcs(x);
    CHECK(pcs.k_max == std::min(m, n - 1));
    const Matrix cov = pcs.scores.transpose() * pcs.scores / static_cast<double>(n);
    CHECK((cov - Matrix::Identity(pcs.k_max, pcs.k_max)).cwiseAbs().maxCoeff() < 1e-8);
    // Eigenvalues are those of the sample covariance.
    const Matrix s = x.values().transpose() * x.values() / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    for (Index j = 0; j < pcs.k_max; ++j)
      CHECK(pcs.spectral.eigenvalues(j) == doctest::Approx(es.eigenvalues()(m - 1 - j)).epsilon(1e-9));
    // Scores are the data projected on the eigenvectors, divided by sqrt(lambda).
    const Matrix direct = x.values() * pcs.spectral.eigenvectors.leftCols(pcs.k_max) *
                          pcs.spectral.eigenvalues.head(pcs.k_max).cwiseSqrt().cwiseInverse().asDiagonal();
    CHECK((direct - pcs.scores).norm() < 1e-8 * direct.norm());
  }
}

TEST_CASE("projection kurtosis matches the moment formula") {
  RandomStream rng(31);
  const CenteredMatrix z = center_columns(mixed_sources(300, 4, rng));
  for (int trial = 0; trial < 10; ++trial) {
    Vector a = test::gaussian(4, 1, rng).col(0);
    a.normalize();
    CHECK(projection_kurtosis(z.values(), a) == doctest::Approx(test::oracle_kurtosis(z.values(), a)).epsilon(1e-12));
  }
  Vector bad = Vector::Ones(4);
  CHECK_THROWS_AS(projection_kurtosis(z.values(), bad), Error);
}

TEST_CASE("kurtosis of a known sample") {
  // Symmetric two-point data has fourth moment equal to variance squared.
  Matrix z(4, 1);
  z << 1, -1, 1, -1;
  CHECK(projection_kurtosis(z, Vector::Ones(1)) == doctest::Approx(2.0));
}

TEST_CASE("kurtosis search reaches the circle-grid maximum for k = 2") {
  RandomStream rng(32);
  for (int trial = 0; trial < 8; ++trial) {
    const CenteredMatrix x = center_columns(mixed_sources(400, 2, rng));
    const SpheredPcs pcs = sphere_pcs(x);
    KurtosisOptions ko;
    ko.seed = static_cast<std::uint64_t>(trial);
    const KurtosisResult r = maximize_kurtosis(pcs.scores, ko);
    CHECK(r.alpha.norm() == doctest::Approx(1.0));
    CHECK(r.beta_hat == doctest::Approx(projection_kurtosis(pcs.scores, r.alpha)).epsilon(1e-12));
    CHECK(r.beta_hat >= grid_max_2d(pcs.scores) - 1e-3);
  }
}

TEST_CASE("kurtosis search finds a sub-Gaussian direction") {
  RandomStream rng(33);
  // One uniform source hidden among Gaussian ones; the uniform has kurtosis 1.8.
  const Index n = 2000;
  Matrix s = test::gaussian(n, 3, rng);
  for (Index i = 0; i < n; ++i) s(i, 2) = rng.uniform();
  const Matrix rot = Eigen::HouseholderQR<Matrix>(test::gaussian(3, 3, rng)).householderQ();
  const SpheredPcs pcs = sphere_pcs(center_columns(s * rot));
  const KurtosisResult r = maximize_kurtosis(pcs.scores);
  CHECK(r.converged);
  CHECK(r.beta_hat == doctest::Approx(1.2).epsilon(0.1));
}

TEST_CASE("kurtosis search is deterministic and validates input") {
  RandomStream rng(34);
  const SpheredPcs pcs = sphere_pcs(center_columns(mixed_sources(200, 5, rng)));
  KurtosisOptions ko;
  ko.seed = 9;
  const KurtosisResult a = maximize_kurtosis(pcs.scores, ko);
  const KurtosisResult b = maximize_kurtosis(pcs.scores, ko);
  CHECK(a.beta_hat == b.beta_hat);
  CHECK(a.alpha == b.alpha);
  ko.include_axes = false;
  ko.n_restarts = 0;
  CHECK_THROWS_AS(maximize_kurtosis(pcs.scores, ko), Error);
  CHECK_THROWS_AS(maximize_kurtosis(pcs.scores.topRows(5)), Error);
}

TEST_CASE("a warm start that is already optimal is kept") {
  RandomStream rng(35);
  const SpheredPcs pcs = sphere_pcs(center_columns(mixed_sources(500, 3, rng)));
  const KurtosisResult first = maximize_kurtosis(pcs.scores);
  KurtosisOptions ko;
  ko.warm_start = first.alpha;
  ko.n_restarts = 0;
  ko.include_axes = false;
  CHECK(maximize_kurtosis(pcs.scores, ko).beta_hat >= first.beta_hat - 1e-12);
}

TEST_CASE("bias adjustment equals sqrt(0.6) times the chi mean") {
  // E[chi_rho] via the Gamma ratio, evaluated with tgamma where it does not overflow.
  for (int k : {2, 3, 4, 5}) {
    const double rho = std::tgamma(k + 4.0) / (24.0 * std::tgamma(k));
    const double chi = std::sqrt(2.0) * std::tgamma((rho + 1) / 2) / std::tgamma(rho / 2);
    CHECK(ub_k(k) == doctest::Approx(std::sqrt(0.6) * chi).epsilon(1e-12));
  }
  // For large rho, E[chi_rho] ~ sqrt(rho - 1/2).
  const double rho50 = 53.0 * 52.0 * 51.0 * 50.0 / 24.0;
  CHECK(ub_k(50) == doctest::Approx(std::sqrt(0.6 * (rho50 - 0.5))).epsilon(1e-8));
  for (int k = 3; k <= 50; ++k) CHECK(ub_k(k) > ub_k(k - 1));
  CHECK_THROWS_AS(ub_k(1), Error);
  CHECK_THROWS_AS(ub_k(51), Error);
}

TEST_CASE("UB overrides load from a file") {
  const UbTable t = UbTable::load(write_temp("ub_ok.txt", "# k value\n2 1.5\n\n7 9.25\n"));
  CHECK(t(2) == 1.5);
  CHECK(t(7) == 9.25);
  CHECK(t(3) == ub_k(3));

  auto message = [](const std::string& text) {
    try {
      UbTable::load(write_temp("ub_bad.txt", text));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::IngestError);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("2 1.0\n2 1.1\n").find(":2:") != std::string::npos);
  CHECK(message("2 1.0\n60 1.0\n").find("[2, 50]") != std::string::npos);
  CHECK(message("2 x\n").find(":1:") != std::string::npos);
  CHECK(message("2.5 1\n").find("integer") != std::string::npos);
}

TEST_CASE("dimension selection scores follow their definition") {
  RandomStream rng(36);
  const CenteredMatrix x = center_columns(mixed_sources(150, 6, rng));
  DimensionOptions opts;
  opts.kurtosis.seed = 4;
  const DimensionSelection sel = select_dimension(x, opts);
  CHECK(sel.k_max == 6);
  CHECK(sel.scores.size() == 5);
  double best = -1e300;
  int arg = 0;
  for (const auto& [k, score] : sel.scores) {
    CHECK(score == doctest::Approx(std::sqrt(150.0 / 24.0) * sel.beta_hats.at(k) - ub_k(k)).epsilon(1e-12));
    if (score > best) {
      best = score;
      arg = k;
    }
  }
  CHECK(sel.argmax_k == arg);
  CHECK(sel.chosen_h <= sel.argmax_k);
  CHECK(sel.chosen_h >= 2);
  const DimensionSelection again = select_dimension(x, opts);
  CHECK(again.scores == sel.scores);
}

TEST_CASE("dimension selection finds planted non-Gaussian structure") {
  RandomStream rng(37);
  const Index n = 400;
  // Two strongly skewed sources with large variance plus Gaussian noise columns.
  Matrix x = 0.3 * test::gaussian(n, 8, rng);
  for (Index i = 0; i < n; ++i) {
    const double e1 = rng.exponential(1.0);
    const double e2 = rng.exponential(1.0);
    x(i, 0) += 5 * e1;
    x(i, 1) += 4 * e2;
  }
  const DimensionSelection sel = select_dimension(center_columns(x));
  CHECK(sel.chosen_h == 2);
}

TEST_CASE("overrides steer the selection") {
  RandomStream rng(38);
  const CenteredMatrix x = center_columns(mixed_sources(200, 5, rng));
  DimensionOptions opts;
  opts.ub = UbTable({{2, 1e6}, {3, 1e6}, {4, 1e6}});
  CHECK(select_dimension(x, opts).chosen_h == 5);
}

TEST_CASE("rank-deficient data limits k_max") {
  RandomStream rng(39);
  const Matrix base = mixed_sources(100, 3, rng);
  Matrix x(100, 6);
  x << base, base * test::gaussian(3, 3, rng);
  const DimensionSelection sel = select_dimension(center_columns(x));
  CHECK(sel.k_max == 3);
  Matrix flat(50, 3);
  flat.col(0) = test::gaussian(50, 1, rng);
  flat.col(1) = 2 * flat.col(0);
  flat.col(2) = -flat.col(0);
  CHECK_THROWS_AS(select_dimension(center_columns(flat)), Error);
}
