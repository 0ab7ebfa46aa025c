#include "spcr/error.hpp"
#include "spcr/ranking.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace spcr;

namespace {

// C computed from its definition with Gram matrices (the 1/N factors cancel).
Matrix direct_canonical(const CenteredMatrix& x, const CenteredMatrix& y) {
  const Matrix& xv = x.values();
  const Matrix& yv = y.values();
  return test::oracle_inv_sqrt(xv.transpose() * xv) * (xv.transpose() * yv) *
         test::oracle_inv_sqrt(yv.transpose() * yv);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("canonical matrix matches the direct formula when p < N") {
  RandomStream rng(10);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 40 + rng.below(60);
    const Index p = 2 + rng.below(10);
    const Index q = 1 + rng.below(4);
    const CenteredMatrix x = center_columns(test::correlated(n, p, rng));
    const Matrix noise = test::gaussian(n, q, rng);
    const CenteredMatrix y = center_columns(x.values() * test::gaussian(p, q, rng) + 2.0 * noise);
    const CanonicalSystem sys = canonical_system(x, y);
    const Matrix oracle = direct_canonical(x, y);
    CHECK((sys.c_hat - oracle).norm() < 1e-9 * oracle.norm());

    // Leading singular triple, and canonical correlations from the
    // eigenvalues of Sxx^-1 Sxy Syy^-1 Syx.
    Eigen::JacobiSVD<Matrix> svd(oracle, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CHECK(sys.kappa1 == doctest::Approx(svd.singularValues()(0)).epsilon(1e-10));
    CHECK(test::abs_cosine(sys.h1, svd.matrixU().col(0)) > 1 - 1e-10);
    CHECK(test::abs_cosine(sys.g1, svd.matrixV().col(0)) > 1 - 1e-10);
    const Matrix& xv = x.values();
    const Matrix& yv = y.values();
    const Matrix k = (xv.transpose() * xv).ldlt().solve(xv.transpose() * yv) *
                     (yv.transpose() * yv).ldlt().solve(yv.transpose() * xv);
    const double rho2 = k.eigenvalues().real().maxCoeff();
    CHECK(sys.kappa1 == doctest::Approx(std::sqrt(rho2)).epsilon(1e-9));
    CHECK(sys.kappa1 <= 1.0 + 1e-10);
  }
}

TEST_CASE("b1 is the sphered leading canonical direction") {
  RandomStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 60;
    const Index p = 3 + rng.below(6);
    const Index q = 2 + rng.below(3);
    const CenteredMatrix x = center_columns(test::correlated(n, p, rng));
    const CenteredMatrix y = center_columns(x.values() * test::gaussian(p, q, rng) + test::gaussian(n, q, rng));
    const ThinSvd svd = thin_svd(x);
    const CanonicalSystem sys = canonical_system(svd, y);
    const Vector b1 = ranking_vector_b1(sys, svd, y);
    const Vector oracle = test::oracle_inv_sqrt(x.values().transpose() * x.values()) * sys.h1;
    CHECK(test::abs_cosine(b1, oracle) > 1 - 1e-10);
    CHECK((ranking_vector_b2(sys) - sys.h1).norm() == 0.0);
  }
}

TEST_CASE("for one response b1 is proportional to the OLS coefficients") {
  RandomStream rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 30 + rng.below(100);
    const Index p = 3 + rng.below(10);
    const Matrix raw = test::correlated(n, p, rng);
    const CenteredMatrix x = center_columns(raw);
    const CenteredMatrix y = center_columns(raw * test::gaussian(p, 1, rng) + test::gaussian(n, 1, rng));
    const ThinSvd svd = thin_svd(x);
    const Vector b1 = ranking_vector_b1(canonical_system(svd, y), svd, y);
    const Vector ols = x.values().colPivHouseholderQr().solve(y.values().col(0));
    CHECK(test::abs_cosine(b1, ols) > 1 - 1e-10);
  }
}

TEST_CASE("with p > N b1 follows the minimum-norm least-squares solution") {
  RandomStream rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 15 + rng.below(10);
    const Index p = 60 + rng.below(40);
    const CenteredMatrix x = center_columns(test::gaussian(n, p, rng));
    const CenteredMatrix y = center_columns(test::gaussian(n, 1, rng));
    const ThinSvd svd = thin_svd(x);
    CHECK(svd.rank == n - 1);
    const Vector b1 = ranking_vector_b1(canonical_system(svd, y), svd, y);
    const Vector pinv = x.values().completeOrthogonalDecomposition().solve(y.values().col(0));
    CHECK(test::abs_cosine(b1, pinv) > 1 - 1e-9);
  }
}

TEST_CASE("an uncorrelated response has no association") {
  Matrix x(6, 2);
  x << 1, 0, -1, 0, 1, 0, -1, 0, 0, 1, 0, -1;
  // Orthogonal to both centred columns.
  Matrix yc(6, 1);
  yc << 1, 1, 1, 1, -2, -2;
  CHECK(kind_of([&] { canonical_system(center_columns(x), center_columns(yc)); }) == ErrorKind::NoAssociation);
}

TEST_CASE("Bair scores equal univariate slopes times column norms") {
  RandomStream rng(14);
  const CenteredMatrix x = center_columns(test::correlated(50, 8, rng));
  const Vector y = x.values() * test::gaussian(8, 1, rng).col(0) + test::gaussian(50, 1, rng).col(0);
  const BairScores s = bair_scores(x, y);
  for (Index j = 0; j < 8; ++j) {
    const Vector xj = x.values().col(j);
    // Slope of y on x_j alone, then rescaled by ||x_j||.
    const double slope = xj.dot(y) / xj.squaredNorm();
    CHECK(s.scores(j) == doctest::Approx(slope * xj.norm()).epsilon(1e-12));
  }
  CHECK(s.zero_norm_columns.empty());
}

TEST_CASE("Bair scores flag constant columns and refuse multivariate responses") {
  RandomStream rng(15);
  Matrix raw = test::gaussian(20, 3, rng);
  raw.col(1).setConstant(4.0);
  const CenteredMatrix x = center_columns(raw);
  const BairScores s = bair_scores(x, Vector(test::gaussian(20, 1, rng).col(0)));
  CHECK(s.scores(1) == 0.0);
  CHECK(s.zero_norm_columns == std::vector<Index>{1});
  CHECK(kind_of([&] { bair_scores(x, center_columns(test::gaussian(20, 2, rng))); }) ==
        ErrorKind::UnsupportedResponse);
}

TEST_CASE("ranking sorts by magnitude and breaks ties by index") {
  Vector s(6);
  s << 0.5, -2.0, 2.0, 0.0, -0.5, 1.0;
  const RankingResult r = rank_variables(s);
  CHECK(r.order == std::vector<Index>{1, 2, 5, 0, 4, 3});
  Vector bad = s;
  bad(3) = std::numeric_limits<double>::infinity();
  CHECK(kind_of([&] { rank_variables(bad); }) == ErrorKind::InvalidData);
}

TEST_CASE("property: ranking is a permutation and follows column permutations") {
  RandomStream rng(16);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = 50;
    const Index p = 4 + rng.below(8);
    const CenteredMatrix x = center_columns(test::correlated(n, p, rng));
    const CenteredMatrix y = center_columns(x.values() * test::gaussian(p, 2, rng) + test::gaussian(n, 2, rng));
    for (Scheme scheme : {Scheme::B1, Scheme::B2}) {
      const RankingResult r = rank_with_scheme(x, y, scheme);
      std::vector<Index> sorted = r.order;
      std::sort(sorted.begin(), sorted.end());
      std::vector<Index> iota(static_cast<std::size_t>(p));
      std::iota(iota.begin(), iota.end(), Index{0});
      CHECK(sorted == iota);
      for (std::size_t i = 1; i < r.order.size(); ++i)
        CHECK(std::abs(r.scores(r.order[i])) <= std::abs(r.scores(r.order[i - 1])));

      // Reversing the columns reverses the identity of the ranked variables.
      std::vector<Index> rev(iota.rbegin(), iota.rend());
      const RankingResult rr = rank_with_scheme(x.select_columns(rev), y, scheme);
      for (std::size_t i = 0; i < 2; ++i) CHECK(p - 1 - rr.order[i] == r.order[i]);
    }
  }
}

TEST_CASE("natural scheme keeps column order") {
  RandomStream rng(17);
  const CenteredMatrix x = center_columns(test::gaussian(20, 5, rng));
  const CenteredMatrix y = center_columns(test::gaussian(20, 1, rng));
  CHECK(rank_with_scheme(x, y, Scheme::Natural).order == std::vector<Index>{0, 1, 2, 3, 4});
}

TEST_CASE("ranked subset takes the leading columns in rank order") {
  RandomStream rng(18);
  const CenteredMatrix x = center_columns(test::gaussian(20, 5, rng));
  Vector s(5);
  s << 1, 5, 3, 4, 2;
  const RankedSubset sub = take_ranked_subset(x, rank_variables(s), 3);
  CHECK(sub.indices == std::vector<Index>{1, 3, 2});
  CHECK(sub.x.values().col(0) == x.values().col(1));
  CHECK(kind_of([&] { take_ranked_subset(x, rank_variables(s), 1); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { take_ranked_subset(x, rank_variables(s), 6); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("tau-prerank keeps the best columns of every block") {
  RandomStream rng(19);
  const Index n = 200;
  const Index p = 100;
  Matrix raw = test::gaussian(n, p, rng);
  Vector y = test::gaussian(n, 1, rng).col(0);
  // Plant one strong variable in every block of 20.
  for (Index b = 0; b < 5; ++b) y += 3.0 * raw.col(b * 20 + 7);
  const CenteredMatrix x = center_columns(raw);
  const CenteredMatrix yc = center_columns(Matrix(y));
  TauRankConfig cfg{5, 20, 4, Scheme::B1, std::nullopt};
  const TauRankResult r = tau_prerank(x, yc, cfg);
  CHECK(r.subset.x.n_cols() == 20);
  CHECK(r.subset.x.n_rows() == n);
  CHECK(r.degenerate_blocks.empty());
  for (Index b = 0; b < 5; ++b) {
    // Kept indices stay inside their block and appear in block order.
    for (Index i = 0; i < 4; ++i) {
      const Index j = r.subset.indices[static_cast<std::size_t>(b * 4 + i)];
      CHECK(j >= b * 20);
      CHECK(j < (b + 1) * 20);
    }
    const auto first = r.subset.indices.begin() + b * 4;
    CHECK(std::find(first, first + 4, b * 20 + 7) != first + 4);
  }
  // Each block's choice equals ranking that block alone.
  std::vector<Index> block0(20);
  std::iota(block0.begin(), block0.end(), Index{0});
  const RankingResult alone = rank_with_scheme(x.select_columns(block0), yc, Scheme::B1);
  for (Index i = 0; i < 4; ++i) CHECK(r.subset.indices[static_cast<std::size_t>(i)] == alone.order[static_cast<std::size_t>(i)]);
}

TEST_CASE("tau-prerank validates its configuration") {
  RandomStream rng(20);
  const CenteredMatrix x = center_columns(test::gaussian(10, 50, rng));
  const CenteredMatrix y = center_columns(test::gaussian(10, 1, rng));
  auto kind = [&](TauRankConfig c) { return kind_of([&] { tau_prerank(x, y, c); }); };
  CHECK(kind({5, 10, 11, Scheme::B1, std::nullopt}) == ErrorKind::InvalidArgument);  // tau > s
  CHECK(kind({5, 10, 10, Scheme::B1, std::nullopt}) == ErrorKind::InvalidArgument);  // p = L tau
  CHECK(kind({4, 10, 2, Scheme::B1, std::nullopt}) == ErrorKind::InvalidArgument);   // uncovered
  CHECK(kind({6, 10, 2, Scheme::B1, std::nullopt}) == ErrorKind::InvalidArgument);   // empty block
  CHECK(kind({5, 10, 2, Scheme::Bair, std::nullopt}) == ErrorKind::InvalidArgument);
  CHECK_NOTHROW(tau_prerank(x, y, {5, 10, 2, Scheme::B2, std::nullopt}));
}

TEST_CASE("tau-prerank shuffling is seeded") {
  RandomStream rng(21);
  const CenteredMatrix x = center_columns(test::gaussian(12, 60, rng));
  const CenteredMatrix y = center_columns(test::gaussian(12, 1, rng));
  const TauRankConfig cfg{3, 20, 5, Scheme::B1, 77};
  CHECK(tau_prerank(x, y, cfg).subset.indices == tau_prerank(x, y, cfg).subset.indices);
  const TauRankResult plain = tau_prerank(x, y, {3, 20, 5, Scheme::B1, std::nullopt});
  CHECK(plain.subset.indices != tau_prerank(x, y, cfg).subset.indices);
}
