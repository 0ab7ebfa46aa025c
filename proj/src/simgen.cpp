#include "spcr/simgen.hpp"

#include "spcr/error.hpp"
#include "spcr/rng.hpp"

#include <cmath>
#include <string>

namespace spcr {

namespace {

enum class Stream : std::uint64_t { Source = 1, PredictorNoise = 2, ResponseNoise = 3, Inert = 4 };

RandomStream stream(std::uint64_t seed, Stream kind, Index column) {
  return RandomStream(derive_seed(seed, {static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(column)}));
}

double draw(RandomStream& rng, SourceKind kind) {
  switch (kind) {
    case SourceKind::Uniform01: return rng.uniform();
    case SourceKind::ExpMean1: return rng.exponential(1.0);
    case SourceKind::StdGaussian: return rng.normal();
  }
  return 0.0;
}

SimulatedDataset generate_impl(const LatentModelSpec& spec, Index n, std::uint64_t seed, bool with_noise) {
  spec.validate();
  require(n >= 1, ErrorKind::InvalidArgument, "sample size must be positive");
  const Index h = spec.h_sources();
  const Index m = spec.n_informative();
  const Index q = spec.n_responses();

  SimulatedDataset out;
  out.seed = seed;
  out.rng = std::string(kRngName) + " v" + std::to_string(kRngVersion);
  out.sources.resize(n, h);
  for (Index c = 0; c < h; ++c) {
    RandomStream rng = stream(seed, Stream::Source, c);
    for (Index i = 0; i < n; ++i) out.sources(i, c) = draw(rng, spec.source_kinds[static_cast<std::size_t>(c)]);
  }

  out.x_raw.resize(n, spec.n_predictors());
  out.x_raw.leftCols(m) = out.sources * spec.p_matrix.transpose();
  out.y_raw = out.sources * spec.w_matrix;
  if (with_noise) {
    for (Index j = 0; j < m; ++j) {
      RandomStream rng = stream(seed, Stream::PredictorNoise, j);
      for (Index i = 0; i < n; ++i) out.x_raw(i, j) += spec.noise_scale * rng.normal();
    }
    for (Index j = 0; j < q; ++j) {
      RandomStream rng = stream(seed, Stream::ResponseNoise, j);
      for (Index i = 0; i < n; ++i) out.y_raw(i, j) += spec.noise_scale * rng.normal();
    }
  }
  const InertLaw& law = spec.inert_law;
  for (Index j = 0; j < spec.n_inert; ++j) {
    RandomStream rng = stream(seed, Stream::Inert, j);
    for (Index i = 0; i < n; ++i) out.x_raw(i, m + j) = law.scale * (law.mean + law.sd * rng.normal());
  }

  out.informative_indices.resize(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) out.informative_indices[static_cast<std::size_t>(j)] = j;
  return out;
}

}  // namespace

std::string_view to_string(SourceKind k) noexcept {
  switch (k) {
    case SourceKind::Uniform01: return "uniform01";
    case SourceKind::ExpMean1: return "exp-mean1";
    case SourceKind::StdGaussian: return "std-gaussian";
  }
  return "?";
}

void LatentModelSpec::validate() const {
  const Index h = h_sources();
  require(h >= 1, ErrorKind::InvalidArgument, "latent model needs at least one source");
  require(p_matrix.cols() == h, ErrorKind::InvalidArgument, "P must have one column per source");
  require(w_matrix.rows() == h, ErrorKind::InvalidArgument, "W must have one row per source");
  require(p_matrix.rows() >= 1 && w_matrix.cols() >= 1, ErrorKind::InvalidArgument, "P and W must be non-empty");
  require(p_matrix.allFinite() && w_matrix.allFinite(), ErrorKind::InvalidArgument, "P and W must be finite");
  require(noise_scale > 0.0 && std::isfinite(noise_scale), ErrorKind::InvalidArgument, "noise scale must be positive");
  require(n_inert >= 0, ErrorKind::InvalidArgument, "inert predictor count must be non-negative");
  require(std::isfinite(inert_law.scale) && std::isfinite(inert_law.mean) && inert_law.sd >= 0.0,
          ErrorKind::InvalidArgument, "invalid inert law");
}

SimulatedDataset generate(const LatentModelSpec& spec, Index n, std::uint64_t seed) {
  return generate_impl(spec, n, seed, true);
}

SimulatedDataset generate_noiseless(const LatentModelSpec& spec, Index n, std::uint64_t seed) {
  return generate_impl(spec, n, seed, false);
}

Matrix example_loading_matrix() {
  Matrix p = Matrix::Zero(7, 3);
  p.topRows(3) = Matrix::Identity(3, 3);
  p.middleRows(3, 3) = 2.0 * Matrix::Identity(3, 3);
  p.row(6).setConstant(3.0);
  return p;
}

LatentModelSpec example_5_1_1_spec() {
  LatentModelSpec spec;
  spec.source_kinds = {SourceKind::Uniform01, SourceKind::ExpMean1, SourceKind::StdGaussian};
  spec.p_matrix = example_loading_matrix();
  spec.w_matrix.resize(3, 1);
  spec.w_matrix << 4.0, -3.0, -2.0;
  spec.noise_scale = 0.5;
  spec.n_inert = 6;
  spec.inert_law = InertLaw{0.5, 1.5, 1.0};
  return spec;
}

LatentModelSpec example_5_1_2_spec() {
  LatentModelSpec spec = example_5_1_1_spec();
  Matrix wt(7, 3);
  wt << 4, -3, -2,
        1, 0, 0,
        0, 1, 0,
        0, 0, 1,
        1, -2, 0,
        0, 1, -2,
        1, 0, -2;
  spec.w_matrix = wt.transpose();
  spec.n_inert = 165;
  return spec;
}

SimulatedDataset example_5_1_1(std::uint64_t seed) { return generate(example_5_1_1_spec(), kExample511Rows, seed); }

SimulatedDataset example_5_1_2(std::uint64_t seed) { return generate(example_5_1_2_spec(), kExample512Rows, seed); }

}  // namespace spcr
