#pragma once

#include "spcr/numerics.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace spcr {

// Natural keeps the input column order (no ranking).
enum class Scheme { B1, B2, Bair, Natural };

std::string_view to_string(Scheme s) noexcept;

/// Sample canonical-correlation matrix and its leading singular triple.
struct CanonicalSystem {
  Matrix c_hat;       // p x q
  double kappa1 = 0;  // largest canonical correlation
  Vector g1;          // q, unit
  Vector h1;          // p, unit
};

/// Canonical correlation matrix V U^T Y_c (Y_c^T Y_c)^{-1/2} computed from the
/// thin SVD of X, so it applies equally when p >= N.
///
/// Throws DegenerateResponse when Y_c^T Y_c is singular and NoAssociation when
/// the leading canonical correlation is below 1e-12.
CanonicalSystem canonical_system(const ThinSvd& x_svd, const CenteredMatrix& y);
CanonicalSystem canonical_system(const CenteredMatrix& x, const CenteredMatrix& y);

/// First canonical covariate vector (sphered ranking vector).
Vector ranking_vector_b1(const CanonicalSystem& sys, const ThinSvd& x_svd, const CenteredMatrix& y);

/// Leading left singular vector of C-hat (unsphered ranking vector).
Vector ranking_vector_b2(const CanonicalSystem& sys);

struct BairScores {
  Vector scores;
  std::vector<Index> zero_norm_columns;  // scored 0
};

/// Marginal scores x_j^T y / ||x_j||. Univariate responses only.
BairScores bair_scores(const CenteredMatrix& x, const Vector& y);
BairScores bair_scores(const CenteredMatrix& x, const CenteredMatrix& y);

struct RankingResult {
  Scheme scheme = Scheme::B1;
  Vector scores;
  std::vector<Index> order;  // by |score| descending, ties by index
};

RankingResult rank_variables(const Vector& scores, Scheme scheme = Scheme::B1);

/// Scores with the given scheme and ranks them in one call.
RankingResult rank_with_scheme(const CenteredMatrix& x, const CenteredMatrix& y, Scheme scheme);

struct RankedSubset {
  CenteredMatrix x;
  std::vector<Index> indices;  // original column index of each output column
};

/// X_m: the first m ranked columns of x, in rank order.
RankedSubset take_ranked_subset(const CenteredMatrix& x, const RankingResult& r, Index m);

struct TauRankConfig {
  Index n_blocks = 5;
  Index block_size = 5000;
  Index keep_per_block = 200;
  Scheme scheme = Scheme::B1;
  /// When set, columns are shuffled with this seed before the contiguous
  /// partition.
  std::optional<std::uint64_t> shuffle_seed;
};

struct TauRankResult {
  RankedSubset subset;
  std::vector<Index> degenerate_blocks;  // blocks with no response association
};

/// Block-wise preliminary ranking: split the columns into n_blocks contiguous
/// blocks, keep the best keep_per_block of each, concatenate in block order.
TauRankResult tau_prerank(const CenteredMatrix& x, const CenteredMatrix& y, const TauRankConfig& cfg);

}  // namespace spcr
