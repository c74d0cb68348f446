#include "ganland/train.hpp"

#include <cmath>
#include <sstream>

#include "ganland/jfn.hpp"
#include "ganland/metrics.hpp"

namespace ganland {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ContractError("train config: " + what); };
  if (gen_hidden.empty() || disc_hidden.empty()) fail("hidden layer lists must be nonempty");
  for (auto d : gen_hidden) if (d == 0) fail("gen_hidden entries must be positive");
  for (auto d : disc_hidden) if (d == 0) fail("disc_hidden entries must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(gp_weight >= 0.0)) fail("gp_weight must be non-negative");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (disc_steps_per_gen_step == 0) fail("disc_steps_per_gen_step must be positive");
  if (latent_dim == 0) fail("latent_dim must be positive");
  if (eval_k == 0 || eval_samples <= eval_k) fail("eval_samples must exceed eval_k");
  Activation::parse(gen_activation, leaky_slope);
  Activation::parse(disc_activation, leaky_slope);
}

AdamState AdamState::for_net(const Mlp& net) {
  AdamState s;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    s.m_weights.emplace_back(net.weights[i].rows(), net.weights[i].cols());
    s.v_weights.emplace_back(net.weights[i].rows(), net.weights[i].cols());
    s.m_biases.emplace_back(net.biases[i].rows(), net.biases[i].cols());
    s.v_biases.emplace_back(net.biases[i].rows(), net.biases[i].cols());
  }
  return s;
}

void adam_update(Mlp& net, const ParamGrads& grads, AdamState& state, double lr, double beta1,
                 double beta2, double eps) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  auto update = [&](Tensor& p, const Tensor& g, Tensor& m, Tensor& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    update(net.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l]);
    update(net.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l]);
  }
}

namespace {

std::vector<std::size_t> chain_dims(std::size_t in, const std::vector<std::size_t>& hidden,
                                    std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

bool finite_grads(const ParamGrads& g) {
  for (const auto* group : {&g.weights, &g.biases}) {
    for (const Tensor& t : *group) {
      if (!t.all_finite()) return false;
    }
  }
  return true;
}

}  // namespace

Mlp make_generator(const TrainConfig& cfg, std::size_t output_dim) {
  // Targets are unbounded points, so the output layer is linear.
  return Mlp::init(chain_dims(cfg.latent_dim, cfg.gen_hidden, output_dim),
                   Activation::parse(cfg.gen_activation, cfg.leaky_slope), Activation::identity(),
                   derive_seed(cfg.seed, SeedDomain::kInit, 0));
}

Mlp make_discriminator(const TrainConfig& cfg, std::size_t input_dim) {
  return Mlp::init(chain_dims(input_dim, cfg.disc_hidden, 1),
                   Activation::parse(cfg.disc_activation, cfg.leaky_slope), Activation::identity(),
                   derive_seed(cfg.seed, SeedDomain::kInit, 1));
}

DiscBatch draw_disc_batch(const GaussianMixtureSpec& spec, const TrainConfig& cfg, Rng& rng) {
  DiscBatch b;
  b.real = draw_mixture(spec, cfg.batch_size, rng);
  b.latent = draw_normal(cfg.batch_size, cfg.latent_dim, rng);
  b.mix = Tensor(cfg.batch_size, 1);
  for (auto& u : b.mix.data()) u = rng.uniform();
  return b;
}

StepStats disc_loss_and_grads(const Mlp& gen, const Mlp& disc, const DiscBatch& batch,
                              double gp_weight, ParamGrads* grads) {
  const Tensor fake = forward(gen, batch.latent);
  if (!fake.same_shape(batch.real) || batch.mix.rows() != batch.real.rows()) {
    throw DimensionError("disc step: real, fake and mix batches disagree");
  }
  Tensor x_hat(fake.rows(), fake.cols());
  for (std::size_t i = 0; i < fake.rows(); ++i) {
    const double u = batch.mix(i, 0);
    for (std::size_t j = 0; j < fake.cols(); ++j) {
      x_hat(i, j) = u * batch.real(i, j) + (1.0 - u) * fake(i, j);
    }
  }

  Tape tape;
  const BoundMlp d = bind(tape, disc);
  const Var d_real = tape.mean_all(forward(tape, d, tape.constant(batch.real)));
  const Var d_fake = tape.mean_all(forward(tape, d, tape.constant(fake)));
  const Var wass = tape.sub(d_fake, d_real);
  const Var xh = tape.leaf(x_hat, true);
  const Var pen = gradient_penalty(tape, forward(tape, d, xh), xh);
  const Var loss = tape.add(wass, tape.scale(pen, gp_weight));

  StepStats s;
  s.loss = tape.value(loss).item();
  s.wasserstein = tape.value(wass).item();
  s.penalty = tape.value(pen).item();
  if (grads) {
    *grads = param_grads(tape, loss, d);
    s.grad_norm = grads->norm();
  }
  return s;
}

StepStats disc_step(const Mlp& gen, Mlp& disc, const DiscBatch& batch, AdamState& adam,
                    const TrainConfig& cfg) {
  ParamGrads g;
  StepStats s;
  try {
    s = disc_loss_and_grads(gen, disc, batch, cfg.gp_weight, &g);
  } catch (const NumericError& e) {
    throw DivergenceError(std::string("critic step diverged: ") + e.what(), adam.step, std::nullopt);
  }
  if (!std::isfinite(s.loss) || !finite_grads(g) || !std::isfinite(s.grad_norm)) {
    std::ostringstream msg;
    msg << "critic step " << adam.step << " produced non-finite values (loss=" << s.loss
        << ", grad norm=" << s.grad_norm << ")";
    throw DivergenceError(msg.str(), adam.step, std::nullopt);
  }
  adam_update(disc, g, adam, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  return s;
}

StepStats gen_loss_and_grads(const Mlp& gen, const Mlp& disc, const Tensor& latent,
                             ParamGrads* grads) {
  Tape tape;
  const BoundMlp g = bind(tape, gen, true);
  const BoundMlp d = bind(tape, disc, false);
  const Var fake = forward(tape, g, tape.constant(latent));
  const Var loss = tape.scale(tape.mean_all(forward(tape, d, fake)), -1.0);
  StepStats s;
  s.loss = tape.value(loss).item();
  s.wasserstein = -s.loss;
  if (grads) {
    *grads = param_grads(tape, loss, g);
    s.grad_norm = grads->norm();
  }
  return s;
}

StepStats gen_step(Mlp& gen, const Mlp& disc, const Tensor& latent, AdamState& adam,
                   const TrainConfig& cfg) {
  ParamGrads g;
  StepStats s;
  try {
    s = gen_loss_and_grads(gen, disc, latent, &g);
  } catch (const NumericError& e) {
    throw DivergenceError(std::string("generator step diverged: ") + e.what(), adam.step, std::nullopt);
  }
  if (!std::isfinite(s.loss) || !finite_grads(g) || !std::isfinite(s.grad_norm)) {
    std::ostringstream msg;
    msg << "generator step " << adam.step << " produced non-finite values (loss=" << s.loss
        << ", grad norm=" << s.grad_norm << ")";
    throw DivergenceError(msg.str(), adam.step, std::nullopt);
  }
  adam_update(gen, g, adam, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  return s;
}

EvalSets eval_sets(const GaussianMixtureSpec& spec, const TrainConfig& cfg) {
  return EvalSets{
      sample_mixture(spec, cfg.eval_samples, derive_seed(cfg.seed, SeedDomain::kEval, 0)),
      sample_latent(LatentSpec{cfg.latent_dim}, cfg.eval_samples,
                    derive_seed(cfg.seed, SeedDomain::kEval, 1))};
}

TrainResult train(const GaussianMixtureSpec& spec, const TrainConfig& cfg,
                  const std::function<void(const TraceRow&)>& on_trace) {
  cfg.validate();
  spec.validate();
  TrainResult result;
  result.generator = make_generator(cfg, spec.dim());
  result.discriminator = make_discriminator(cfg, spec.dim());
  AdamState gen_adam = AdamState::for_net(result.generator);
  AdamState disc_adam = AdamState::for_net(result.discriminator);
  Rng rng(derive_seed(cfg.seed, SeedDomain::kTrainData));
  const EvalSets eval = eval_sets(spec, cfg);

  auto record = [&](std::size_t step, double dl, double gl) {
    SampleSet fake{forward(result.generator, eval.latents.points), Origin::kGenerated, cfg.seed};
    const PrReport pr = improved_pr(fake, eval.real, cfg.eval_k);
    TraceRow row{step, dl, gl, pr.precision, pr.recall};
    result.trace.push_back(row);
    if (on_trace) on_trace(row);
  };

  double disc_loss = 0.0;
  double gen_loss = 0.0;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const Mlp last_good = result.generator;
    try {
      for (std::size_t c = 0; c < cfg.disc_steps_per_gen_step; ++c) {
        const DiscBatch batch = draw_disc_batch(spec, cfg, rng);
        disc_loss = disc_step(result.generator, result.discriminator, batch, disc_adam, cfg).loss;
      }
      const Tensor z = draw_normal(cfg.batch_size, cfg.latent_dim, rng);
      gen_loss = gen_step(result.generator, result.discriminator, z, gen_adam, cfg).loss;
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at training step " + std::to_string(step),
                            step, last_good);
    }
    if (cfg.trace_interval > 0 && step % cfg.trace_interval == 0 && step != cfg.steps) {
      record(step, disc_loss, gen_loss);
    }
  }
  record(cfg.steps, disc_loss, gen_loss);
  result.lipschitz = lipschitz_upper(result.generator);
  return result;
}

}  // namespace ganland
