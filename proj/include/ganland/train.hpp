#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganland/data.hpp"
#include "ganland/mlp.hpp"
#include "ganland/rng.hpp"

namespace ganland {

/// WGAN-GP hyperparameters. Defaults are the synthetic-model table values.
struct TrainConfig {
  std::vector<std::size_t> gen_hidden{20, 20};
  std::vector<std::size_t> disc_hidden{20, 20};
  std::string gen_activation = "relu";
  std::string disc_activation = "leaky_relu";
  double leaky_slope = 0.2;
  std::size_t batch_size = 32;
  double gp_weight = 10.0;
  double lr = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.5;
  double adam_eps = 1e-8;
  std::size_t steps = 100000;
  std::size_t disc_steps_per_gen_step = 5;
  std::size_t latent_dim = 2;
  std::uint64_t seed = 42;
  // Trace evaluation (0 disables intermediate rows; a final row is always written).
  std::size_t trace_interval = 5000;
  std::size_t eval_samples = 2500;
  std::size_t eval_k = 3;

  void validate() const;
};

/// Adam moments for one network.
struct AdamState {
  std::vector<Tensor> m_weights, v_weights, m_biases, v_biases;
  std::size_t step = 0;

  static AdamState for_net(const Mlp& net);
};

/// p <- p - lr * mhat / (sqrt(vhat) + eps) with bias-corrected moments.
void adam_update(Mlp& net, const ParamGrads& grads, AdamState& state, double lr, double beta1,
                 double beta2, double eps);

/// Raised when a loss or gradient stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step, std::optional<Mlp> last_good)
      : std::runtime_error(what), step_(step), last_good_(std::move(last_good)) {}
  std::size_t step() const { return step_; }
  const std::optional<Mlp>& last_good() const { return last_good_; }

 private:
  std::size_t step_;
  std::optional<Mlp> last_good_;
};

Mlp make_generator(const TrainConfig& cfg, std::size_t output_dim);
Mlp make_discriminator(const TrainConfig& cfg, std::size_t input_dim);

/// Random inputs of one critic update.
struct DiscBatch {
  Tensor real;    // batch x dim
  Tensor latent;  // batch x latent_dim
  Tensor mix;     // batch x 1, interpolation weight u in [0, 1)
};

/// Draws real points, then latents, then one u per sample, in that order.
DiscBatch draw_disc_batch(const GaussianMixtureSpec& spec, const TrainConfig& cfg, Rng& rng);

struct StepStats {
  double loss = 0.0;
  double wasserstein = 0.0;  // mean D(fake) - mean D(real)
  double penalty = 0.0;
  double grad_norm = 0.0;
};

/// Critic loss mean D(fake) - mean D(real) + gp_weight * mean (|grad D(x_hat)| - 1)^2,
/// x_hat = u real + (1 - u) fake. Evaluates the loss and its gradients without updating.
StepStats disc_loss_and_grads(const Mlp& gen, const Mlp& disc, const DiscBatch& batch,
                              double gp_weight, ParamGrads* grads);

/// One Adam step on the critic. Throws DivergenceError on non-finite values.
StepStats disc_step(const Mlp& gen, Mlp& disc, const DiscBatch& batch, AdamState& adam,
                    const TrainConfig& cfg);

/// Generator loss -mean D(G(z)) and its gradient w.r.t. the generator.
StepStats gen_loss_and_grads(const Mlp& gen, const Mlp& disc, const Tensor& latent,
                             ParamGrads* grads);

/// One Adam step on the generator.
StepStats gen_step(Mlp& gen, const Mlp& disc, const Tensor& latent, AdamState& adam,
                   const TrainConfig& cfg);

struct TraceRow {
  std::size_t step = 0;
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct TrainResult {
  Mlp generator;
  Mlp discriminator;
  std::vector<TraceRow> trace;
  double lipschitz = 0.0;  // product of generator layer spectral norms
};

/// Full WGAN-GP run; bit-reproducible from (spec, cfg). Throws
/// DivergenceError carrying the last finite generator.
TrainResult train(const GaussianMixtureSpec& spec, const TrainConfig& cfg,
                  const std::function<void(const TraceRow&)>& on_trace = {});

/// Improved PR of cfg.eval_samples generated points vs as many real points,
/// using the evaluation seed streams of cfg.seed.
struct EvalSets {
  SampleSet real;
  SampleSet latents;
};
EvalSets eval_sets(const GaussianMixtureSpec& spec, const TrainConfig& cfg);

}  // namespace ganland
