#include "ganland/mlp.hpp"

#include <cmath>

#include "ganland/rng.hpp"

namespace ganland {

bool Activation::contractive() const {
  switch (kind) {
    case Kind::kIdentity:
    case Kind::kRelu:
    case Kind::kTanh:
      return true;
    case Kind::kLeakyRelu:
      return std::abs(slope) <= 1.0;
  }
  return false;
}

std::string Activation::name() const {
  switch (kind) {
    case Kind::kIdentity: return "identity";
    case Kind::kRelu: return "relu";
    case Kind::kLeakyRelu: return "leaky_relu";
    case Kind::kTanh: return "tanh";
  }
  return "?";
}

Activation Activation::parse(const std::string& name, double slope) {
  if (name == "identity") return identity();
  if (name == "relu") return relu();
  if (name == "leaky_relu") return leaky_relu(slope);
  if (name == "tanh") return tanh();
  throw ContractError("unknown activation '" + name + "'");
}

void Mlp::validate() const {
  if (layer_dims.size() < 2) throw DimensionError("mlp needs at least two layer dims");
  if (weights.size() + 1 != layer_dims.size() || biases.size() != weights.size()) {
    throw DimensionError("mlp layer count does not match layer_dims");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].rows() != layer_dims[i + 1] || weights[i].cols() != layer_dims[i]) {
      throw DimensionError("weight " + std::to_string(i) + " has shape " +
                           weights[i].shape_string());
    }
    if (biases[i].rows() != 1 || biases[i].cols() != layer_dims[i + 1]) {
      throw DimensionError("bias " + std::to_string(i) + " has shape " + biases[i].shape_string());
    }
  }
}

Mlp Mlp::init(std::vector<std::size_t> dims, Activation hidden, Activation output,
              std::uint64_t seed) {
  Mlp net;
  net.layer_dims = std::move(dims);
  net.hidden_activation = hidden;
  net.output_activation = output;
  net.seed = seed;
  if (net.layer_dims.size() < 2) throw DimensionError("mlp needs at least two layer dims");
  Rng rng(derive_seed(seed, SeedDomain::kInit));
  for (std::size_t i = 0; i + 1 < net.layer_dims.size(); ++i) {
    const std::size_t in = net.layer_dims[i];
    const std::size_t out = net.layer_dims[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w(out, in);
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
    Tensor b(1, out);
    for (auto& v : b.data()) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

std::vector<Var> BoundMlp::params() const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i]);
    out.push_back(biases[i]);
  }
  return out;
}

BoundMlp bind(Tape& tape, const Mlp& net, bool requires_grad) {
  net.validate();
  BoundMlp bound;
  bound.net = &net;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    bound.weights.push_back(tape.leaf(net.weights[i], requires_grad));
    bound.biases.push_back(tape.leaf(net.biases[i], requires_grad));
  }
  return bound;
}

namespace {

Var activate(Tape& tape, Var x, const Activation& act) {
  switch (act.kind) {
    case Activation::Kind::kIdentity: return x;
    case Activation::Kind::kRelu: return tape.relu(x);
    case Activation::Kind::kLeakyRelu: return tape.leaky_relu(x, act.slope);
    case Activation::Kind::kTanh: return tape.tanh(x);
  }
  return x;
}

}  // namespace

Var forward(Tape& tape, const BoundMlp& net, Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.cols() != net.net->input_dim()) {
    throw DimensionError("forward: input " + xv.shape_string() + " but network expects " +
                         std::to_string(net.net->input_dim()) + " columns");
  }
  Var h = x;
  const std::size_t layers = net.weights.size();
  for (std::size_t i = 0; i < layers; ++i) {
    h = tape.add_bias(tape.matmul_nt(h, net.weights[i]), net.biases[i]);
    h = activate(tape, h, i + 1 == layers ? net.net->output_activation : net.net->hidden_activation);
  }
  return h;
}

Tensor forward(const Mlp& net, const Tensor& batch) {
  Tape tape;
  const BoundMlp bound = bind(tape, net, false);
  const Var x = tape.constant(batch);
  return tape.value(forward(tape, bound, x));
}

ParamGrads ParamGrads::zeros_like(const Mlp& net) {
  ParamGrads g;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    g.weights.emplace_back(net.weights[i].rows(), net.weights[i].cols());
    g.biases.emplace_back(net.biases[i].rows(), net.biases[i].cols());
  }
  return g;
}

double ParamGrads::norm() const {
  double acc = 0.0;
  for (const auto* group : {&weights, &biases}) {
    for (const Tensor& t : *group) {
      for (double v : t.data()) acc += v * v;
    }
  }
  return std::sqrt(acc);
}

ParamGrads param_grads(Tape& tape, Var loss, const BoundMlp& net) {
  if (tape.value(loss).rows() != 1 || tape.value(loss).cols() != 1) {
    throw ContractError("param_grads: loss must be a scalar, got " +
                        tape.value(loss).shape_string());
  }
  const std::vector<Var> params = net.params();
  const auto grads = tape.grad(loss, params);
  ParamGrads out = ParamGrads::zeros_like(*net.net);
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    if (grads[2 * i]) out.weights[i] = tape.value(*grads[2 * i]);
    if (grads[2 * i + 1]) out.biases[i] = tape.value(*grads[2 * i + 1]);
  }
  return out;
}

Tensor input_grad(const Mlp& net, const Tensor& x) {
  if (net.output_dim() != 1) {
    throw ContractError("input_grad: network output must be scalar, has " +
                        std::to_string(net.output_dim()) + " outputs");
  }
  Tape tape;
  const BoundMlp bound = bind(tape, net, false);
  const Var xv = tape.leaf(x, true);
  const Var out = forward(tape, bound, xv);
  const Var xs[] = {xv};
  const auto g = tape.grad(out, xs);
  return g[0] ? tape.value(*g[0]) : Tensor(x.rows(), x.cols());
}

Var gradient_penalty(Tape& tape, Var out, Var x) {
  const Var xs[] = {x};
  const auto g = tape.grad(out, xs, std::nullopt, /*create_graph=*/true);
  const Var gx = g[0] ? *g[0] : tape.constant(Tensor(tape.value(x).rows(), tape.value(x).cols()));
  const Var dev = tape.add_scalar(tape.row_norm(gx), -1.0);
  return tape.mean_all(tape.square(dev));
}

PenaltyResult grad_penalty_grads(const Mlp& disc, const Tensor& x_hat) {
  if (disc.output_dim() != 1) throw ContractError("grad_penalty_grads: discriminator must be scalar");
  Tape tape;
  const BoundMlp bound = bind(tape, disc, true);
  const Var x = tape.leaf(x_hat, true);
  const Var out = forward(tape, bound, x);
  const Var penalty = gradient_penalty(tape, out, x);
  PenaltyResult result;
  result.penalty = tape.value(penalty).item();
  result.grads = param_grads(tape, penalty, bound);
  return result;
}

}  // namespace ganland
