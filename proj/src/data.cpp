#include "ganland/data.hpp"

#include <cmath>
#include <limits>

#include "ganland/rng.hpp"

namespace ganland {

GaussianMixtureSpec GaussianMixtureSpec::grid(std::size_t num_components, double spacing,
                                              double component_std) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(num_components))));
  if (num_components == 0 || side * side != num_components) {
    throw ContractError("grid mixture needs a perfect-square component count, got " +
                        std::to_string(num_components));
  }
  if (!(spacing > 0.0)) throw ContractError("grid mixture spacing must be positive");
  GaussianMixtureSpec spec;
  spec.spacing = spacing;
  spec.component_std = component_std > 0.0 ? component_std : 0.05 * spacing;
  spec.centers = Tensor(num_components, 2);
  const double offset = 0.5 * static_cast<double>(side - 1);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const std::size_t m = i * side + j;
      spec.centers(m, 0) = (static_cast<double>(i) - offset) * spacing;
      spec.centers(m, 1) = (static_cast<double>(j) - offset) * spacing;
    }
  }
  return spec;
}

double GaussianMixtureSpec::min_center_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centers.rows(); ++a) {
    for (std::size_t b = a + 1; b < centers.rows(); ++b) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < centers.cols(); ++k) {
        const double d = centers(a, k) - centers(b, k);
        d2 += d * d;
      }
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

void GaussianMixtureSpec::validate() const {
  if (centers.rows() == 0 || centers.cols() == 0) throw ContractError("mixture has no components");
  if (!centers.all_finite()) throw ContractError("mixture centers must be finite");
  if (!(component_std > 0.0)) throw ContractError("mixture component_std must be positive");
  // Relative slack: grid centers are computed in floating point.
  if (min_center_distance() < spacing * (1.0 - 1e-12)) {
    throw ContractError("mixture centers closer than the declared spacing");
  }
}

Tensor draw_mixture(const GaussianMixtureSpec& spec, std::size_t n, Rng& rng,
                    std::vector<std::size_t>* labels) {
  Tensor out(n, spec.dim());
  if (labels) labels->assign(n, 0);
  const std::size_t m = spec.num_components();
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(rng.below(m));
    if (labels) (*labels)[i] = c;
    for (std::size_t k = 0; k < spec.dim(); ++k) {
      out(i, k) = spec.centers(c, k) + spec.component_std * rng.normal();
    }
  }
  return out;
}

Tensor draw_normal(std::size_t n, std::size_t dim, Rng& rng) {
  Tensor out(n, dim);
  for (auto& v : out.data()) v = rng.normal();
  return out;
}

SampleSet sample_mixture(const GaussianMixtureSpec& spec, std::size_t n, std::uint64_t seed,
                         std::vector<std::size_t>* labels) {
  spec.validate();
  if (n == 0) throw ContractError("sample_mixture: n must be at least 1");
  Rng rng(derive_seed(seed, SeedDomain::kMixture));
  return SampleSet{draw_mixture(spec, n, rng, labels), Origin::kReal, seed};
}

SampleSet sample_latent(const LatentSpec& spec, std::size_t n, std::uint64_t seed) {
  if (spec.dim == 0) throw ContractError("latent dim must be at least 1");
  Rng rng(derive_seed(seed, SeedDomain::kLatent));
  return SampleSet{draw_normal(n, spec.dim, rng), Origin::kGenerated, seed};
}

SampleSet sample_uniform(std::size_t n, std::size_t dim, double lo, double hi, std::uint64_t seed) {
  Rng rng(derive_seed(seed, SeedDomain::kMixture));
  SampleSet out{Tensor(n, dim), Origin::kReal, seed};
  for (auto& v : out.points.data()) v = rng.uniform(lo, hi);
  return out;
}

}  // namespace ganland
