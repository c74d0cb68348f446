#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganland/tensor.hpp"

namespace ganland {

class Rng;

/// M equally weighted isotropic Gaussians. Centers are rows of an M x dim tensor.
struct GaussianMixtureSpec {
  Tensor centers;
  double spacing = 0.0;  // minimum pairwise center distance D
  double component_std = 0.0;

  std::size_t num_components() const { return centers.rows(); }
  std::size_t dim() const { return centers.cols(); }

  /// sqrt(M) x sqrt(M) axis-aligned grid of step D centered at the origin.
  /// component_std <= 0 selects the default 0.05 D.
  static GaussianMixtureSpec grid(std::size_t num_components, double spacing,
                                  double component_std = 0.0);

  /// Smallest pairwise distance between centers (infinity for M = 1).
  double min_center_distance() const;

  /// Throws ContractError unless centers are nonempty and finite, std > 0,
  /// and pairwise distances are at least `spacing`.
  void validate() const;
};

struct LatentSpec {
  std::size_t dim = 2;
};

enum class Origin { kReal, kGenerated };

struct SampleSet {
  Tensor points;
  Origin origin = Origin::kReal;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }
};

/// Each point: component index uniform over M, then N(center, std^2 I).
/// Also returns the component label of every point when `labels` is given.
SampleSet sample_mixture(const GaussianMixtureSpec& spec, std::size_t n, std::uint64_t seed,
                         std::vector<std::size_t>* labels = nullptr);

/// Same law as sample_mixture, drawing from an existing stream.
Tensor draw_mixture(const GaussianMixtureSpec& spec, std::size_t n, Rng& rng,
                    std::vector<std::size_t>* labels = nullptr);

/// n x dim standard normals from an existing stream, row-major order.
Tensor draw_normal(std::size_t n, std::size_t dim, Rng& rng);

/// n i.i.d. draws from N(0, I_dim).
SampleSet sample_latent(const LatentSpec& spec, std::size_t n, std::uint64_t seed);

/// n i.i.d. draws from Uniform([lo, hi]^dim).
SampleSet sample_uniform(std::size_t n, std::size_t dim, double lo, double hi, std::uint64_t seed);

}  // namespace ganland
