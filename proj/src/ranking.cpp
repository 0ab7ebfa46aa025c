#include "spcr/ranking.hpp"

#include "spcr/error.hpp"
#include "spcr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace spcr {

namespace {

constexpr double kNoAssociation = 1e-12;

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

}  // namespace

std::string_view to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::B1: return "b1";
    case Scheme::B2: return "b2";
    case Scheme::Bair: return "bair";
    case Scheme::Natural: return "natural";
  }
  return "?";
}

CanonicalSystem canonical_system(const ThinSvd& x_svd, const CenteredMatrix& y) {
  require(x_svd.u.rows() == y.n_rows(), ErrorKind::InvalidArgument, "X and Y must have the same number of rows");
  const Matrix m = inv_sqrt_gram(y);

  CanonicalSystem sys;
  sys.c_hat = x_svd.v * ((x_svd.u.transpose() * y.values()) * m);

  const ThinSvd c_svd = thin_svd(sys.c_hat);
  sys.kappa1 = c_svd.rank > 0 ? c_svd.l(0) : 0.0;
  if (!(sys.kappa1 >= kNoAssociation))
    fail(ErrorKind::NoAssociation, "leading canonical correlation is zero; responses are uncorrelated with predictors");
  sys.g1 = c_svd.v.col(0);
  sys.h1 = c_svd.u.col(0);
  return sys;
}

CanonicalSystem canonical_system(const CenteredMatrix& x, const CenteredMatrix& y) {
  return canonical_system(thin_svd(x), y);
}

Vector ranking_vector_b1(const CanonicalSystem& sys, const ThinSvd& x_svd, const CenteredMatrix& y) {
  require(sys.kappa1 >= kNoAssociation, ErrorKind::NoAssociation, "leading canonical correlation is zero");
  require(x_svd.u.rows() == y.n_rows(), ErrorKind::InvalidArgument, "X and Y must have the same number of rows");
  const Vector w = x_svd.u.transpose() * (y.values() * (inv_sqrt_gram(y) * sys.g1));
  return x_svd.v * (w.cwiseQuotient(x_svd.l) / sys.kappa1);
}

Vector ranking_vector_b2(const CanonicalSystem& sys) {
  require(sys.kappa1 >= kNoAssociation, ErrorKind::NoAssociation, "leading canonical correlation is zero");
  return sys.h1;
}

BairScores bair_scores(const CenteredMatrix& x, const Vector& y) {
  require(y.size() == x.n_rows(), ErrorKind::InvalidArgument, "response length does not match the number of rows");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double root_n = std::sqrt(static_cast<double>(x.n_rows()));

  BairScores out;
  out.scores = Vector::Zero(x.n_cols());
  for (Index j = 0; j < x.n_cols(); ++j) {
    const auto col = x.values().col(j);
    const double norm = col.norm();
    // A constant column centres to rounding noise of order eps * |mean|.
    const double floor = 16.0 * eps * root_n * (std::abs(x.column_means()(j)) + col.cwiseAbs().maxCoeff());
    if (!(norm > floor)) {
      out.zero_norm_columns.push_back(j);
      continue;
    }
    out.scores(j) = col.dot(y) / norm;
  }
  return out;
}

BairScores bair_scores(const CenteredMatrix& x, const CenteredMatrix& y) {
  if (y.n_cols() != 1)
    fail(ErrorKind::UnsupportedResponse, "marginal (Bair) scores are defined for univariate responses only");
  return bair_scores(x, Vector(y.values().col(0)));
}

RankingResult rank_variables(const Vector& scores, Scheme scheme) {
  require(scores.allFinite(), ErrorKind::InvalidData, "ranking scores must be finite");
  RankingResult r;
  r.scheme = scheme;
  r.scores = scores;
  r.order = iota_indices(scores.size());
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](Index a, Index b) { return std::abs(scores(a)) > std::abs(scores(b)); });
  return r;
}

RankingResult rank_with_scheme(const CenteredMatrix& x, const CenteredMatrix& y, Scheme scheme) {
  if (scheme == Scheme::Bair) return rank_variables(bair_scores(x, y).scores, scheme);
  if (scheme == Scheme::Natural) return rank_variables(Vector::Zero(x.n_cols()), scheme);
  const ThinSvd svd = thin_svd(x);
  const CanonicalSystem sys = canonical_system(svd, y);
  Vector scores = scheme == Scheme::B1 ? ranking_vector_b1(sys, svd, y) : ranking_vector_b2(sys);
  return rank_variables(scores, scheme);
}

RankedSubset take_ranked_subset(const CenteredMatrix& x, const RankingResult& r, Index m) {
  require(m >= 2, ErrorKind::InvalidArgument, "ranked subset size m must be at least 2");
  require(m <= x.n_cols(), ErrorKind::InvalidArgument, "ranked subset size m exceeds the number of variables");
  require(static_cast<Index>(r.order.size()) == x.n_cols(), ErrorKind::InvalidArgument,
          "ranking does not match the number of variables");
  std::vector<Index> idx(r.order.begin(), r.order.begin() + m);
  return RankedSubset{x.select_columns(idx), std::move(idx)};
}

TauRankResult tau_prerank(const CenteredMatrix& x, const CenteredMatrix& y, const TauRankConfig& cfg) {
  const Index p = x.n_cols();
  const Index blocks = cfg.n_blocks;
  const Index s = cfg.block_size;
  const Index tau = cfg.keep_per_block;
  require(blocks >= 1 && s >= 1 && tau >= 1, ErrorKind::InvalidArgument, "tau-prerank parameters must be positive");
  require(cfg.scheme == Scheme::B1 || cfg.scheme == Scheme::B2, ErrorKind::InvalidArgument,
          "tau-prerank uses the b1 or b2 scheme");
  require(tau <= s, ErrorKind::InvalidArgument, "tau must not exceed the block size");
  require(p > blocks * tau, ErrorKind::InvalidArgument,
          "tau-prerank would not shrink the data (p <= L * tau)");
  require(blocks * s >= p, ErrorKind::InvalidArgument, "blocks do not cover all columns (L * s < p)");
  require((blocks - 1) * s < p, ErrorKind::InvalidArgument, "last block would be empty ((L - 1) * s >= p)");

  std::vector<Index> columns = iota_indices(p);
  if (cfg.shuffle_seed) {
    RandomStream rng(derive_seed(*cfg.shuffle_seed, {hash_tag("tau-prerank-shuffle")}));
    for (Index i = p - 1; i > 0; --i) {
      const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(columns[static_cast<std::size_t>(i)], columns[static_cast<std::size_t>(j)]);
    }
  }

  TauRankResult out;
  std::vector<Index> kept;
  kept.reserve(static_cast<std::size_t>(blocks * tau));
  for (Index b = 0; b < blocks; ++b) {
    const Index begin = b * s;
    const Index end = std::min(p, begin + s);
    std::vector<Index> cols(columns.begin() + begin, columns.begin() + end);
    const CenteredMatrix xb = x.select_columns(cols);

    RankingResult r;
    try {
      r = rank_with_scheme(xb, y, cfg.scheme);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoAssociation) throw;
      r = rank_variables(Vector::Zero(xb.n_cols()), cfg.scheme);
      out.degenerate_blocks.push_back(b);
    }
    const Index keep = std::min(tau, end - begin);
    for (Index k = 0; k < keep; ++k) kept.push_back(cols[static_cast<std::size_t>(r.order[static_cast<std::size_t>(k)])]);
  }

  out.subset.x = x.select_columns(kept);
  out.subset.indices = std::move(kept);
  return out;
}

}  // namespace spcr
