#pragma once

#include "spcr/numerics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spcr {

enum class SourceKind { Uniform01, ExpMean1, StdGaussian };

std::string_view to_string(SourceKind k) noexcept;

/// scale * N(mean, sd^2), drawn independently for every entry.
struct InertLaw {
  double scale = 0.5;
  double mean = 1.5;
  double sd = 1.0;
};

/// Latent model: x_* = P s + eta, y = W^T s + delta, plus n_inert
/// uninformative predictors appended after the informative ones.
struct LatentModelSpec {
  std::vector<SourceKind> source_kinds;  // H entries
  Matrix p_matrix;                       // m x H
  Matrix w_matrix;                       // H x q (W, so y = W^T s)
  double noise_scale = 0.5;
  Index n_inert = 0;
  InertLaw inert_law;

  Index h_sources() const noexcept { return static_cast<Index>(source_kinds.size()); }
  Index n_informative() const noexcept { return p_matrix.rows(); }
  Index n_predictors() const noexcept { return p_matrix.rows() + n_inert; }
  Index n_responses() const noexcept { return w_matrix.cols(); }

  void validate() const;
};

struct SimulatedDataset {
  Matrix x_raw;  // N x p
  Matrix y_raw;  // N x q
  Matrix sources;  // N x H, the latent draws
  std::vector<Index> informative_indices;
  std::uint64_t seed = 0;
  std::string rng;  // algorithm name and version
};

/// Every source, noise and inert column draws from its own stream derived
/// from (seed, column), so adding inert columns leaves the rest unchanged.
SimulatedDataset generate(const LatentModelSpec& spec, Index n, std::uint64_t seed);
/// Same, with the noise terms eta and delta forced to zero.
SimulatedDataset generate_noiseless(const LatentModelSpec& spec, Index n, std::uint64_t seed);

/// Three sources (uniform, exponential, Gaussian) mapped to seven informative
/// predictors by the block matrix [I3; 2 I3; 3 3 3].
Matrix example_loading_matrix();

LatentModelSpec example_5_1_1_spec();  // q = 1, p = 13
LatentModelSpec example_5_1_2_spec();  // q = 7, p = 172

inline constexpr Index kExample511Rows = 172;
inline constexpr Index kExample512Rows = 52;

SimulatedDataset example_5_1_1(std::uint64_t seed);
SimulatedDataset example_5_1_2(std::uint64_t seed);

}  // namespace spcr
