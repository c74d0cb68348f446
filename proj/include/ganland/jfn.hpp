#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ganland/data.hpp"
#include "ganland/mlp.hpp"

namespace ganland {

enum class JfnMethod { kExact, kStochastic };

std::string to_string(JfnMethod method);
JfnMethod parse_jfn_method(const std::string& name);

/// Jacobian dG/dz at every latent row: one output_dim x input_dim tensor per
/// row. Uses one backward pass per output coordinate over the whole batch.
std::vector<Tensor> jacobians(const Mlp& gen, const Tensor& latents);

/// ||J_G(z)||_F for every latent row.
std::vector<double> jfn_exact(const Mlp& gen, const Tensor& latents);
double jfn_exact(const Mlp& gen, std::span<const double> z);

/// sqrt( (1/N) sum_i |G(z + e_i) - G(z)|^2 / sigma^2 ), e_i ~ N(0, sigma^2 I).
/// The mean is unbiased for ||J||_F^2 when G is linear. The probes for latent
/// row r come from the stream derive_seed(seed, kProbe, r), so results do not
/// depend on batch composition.
std::vector<double> jfn_stochastic(const Mlp& gen, const Tensor& latents, double sigma,
                                   std::size_t probes, std::uint64_t seed);
double jfn_stochastic(const Mlp& gen, std::span<const double> z, double sigma, std::size_t probes,
                      std::uint64_t seed);

struct JbtConfig {
  double keep_ratio = 0.7;
  double sigma = 1e-3;
  std::size_t probes = 10;
  JfnMethod method = JfnMethod::kStochastic;
  bool check_sigma_range = true;  // require sigma in [1e-4, 1e-2]
  std::uint64_t seed = 42;

  void validate() const;
};

struct JbtResult {
  SampleSet kept;        // outputs in original latent order
  SampleSet rejected;
  std::vector<double> jfn;         // per latent
  std::vector<bool> kept_mask;     // per latent
  Tensor outputs;                  // G(z) for every latent
};

/// Keeps the ceil(keep_ratio * n) latents with the smallest JFN (ties broken by
/// latent index) and rejects the rest.
JbtResult jbt_filter(const Mlp& gen, const SampleSet& latents, const JbtConfig& cfg);

/// JFN scores by the configured method.
std::vector<double> jfn_scores(const Mlp& gen, const Tensor& latents, const JbtConfig& cfg);

/// Largest singular value by power iteration on W^T W (relative tolerance
/// 1e-10 on successive estimates). Throws NumericError after 10000 iterations.
double spectral_norm(const Tensor& w);

/// Product of layer spectral norms; an upper bound on the Lipschitz constant
/// when every activation is 1-Lipschitz (ContractError otherwise).
double lipschitz_upper(const Mlp& net);

}  // namespace ganland
