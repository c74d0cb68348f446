#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganland/tape.hpp"
#include "ganland/tensor.hpp"

namespace ganland {

struct Activation {
  enum class Kind { kIdentity, kRelu, kLeakyRelu, kTanh };
  Kind kind = Kind::kRelu;
  double slope = 0.0;  // only for kLeakyRelu

  static Activation identity() { return {Kind::kIdentity, 0.0}; }
  static Activation relu() { return {Kind::kRelu, 0.0}; }
  static Activation leaky_relu(double slope) { return {Kind::kLeakyRelu, slope}; }
  static Activation tanh() { return {Kind::kTanh, 0.0}; }

  /// True when the activation is 1-Lipschitz.
  bool contractive() const;
  std::string name() const;
  static Activation parse(const std::string& name, double slope = 0.2);

  friend bool operator==(const Activation&, const Activation&) = default;
};

/// Dense feed-forward network. Layer i maps dims[i] -> dims[i+1] with
/// weight shape (dims[i+1], dims[i]) and bias shape (1, dims[i+1]).
struct Mlp {
  std::vector<std::size_t> layer_dims;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  Activation hidden_activation = Activation::relu();
  Activation output_activation = Activation::identity();
  std::uint64_t seed = 0;
  std::string meta;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }

  /// Throws DimensionError if the stored shapes do not chain.
  void validate() const;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp init(std::vector<std::size_t> dims, Activation hidden, Activation output,
                  std::uint64_t seed);

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// An Mlp's parameters placed on a tape. Order: weights[0], biases[0], weights[1], ...
struct BoundMlp {
  const Mlp* net = nullptr;
  std::vector<Var> weights;
  std::vector<Var> biases;

  std::vector<Var> params() const;
};

BoundMlp bind(Tape& tape, const Mlp& net, bool requires_grad = true);

/// Records net(x) on the tape. x is n x input_dim.
Var forward(Tape& tape, const BoundMlp& net, Var x);

/// Evaluates the network on a batch; bit-identical for identical inputs.
Tensor forward(const Mlp& net, const Tensor& batch);

/// Gradients of every parameter, same shapes as net.weights/net.biases.
struct ParamGrads {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  static ParamGrads zeros_like(const Mlp& net);
  double norm() const;
};

/// Gradient of the scalar `loss` w.r.t. the bound parameters.
/// Throws ContractError if loss is not 1 x 1.
ParamGrads param_grads(Tape& tape, Var loss, const BoundMlp& net);

/// Gradient of a scalar-output net w.r.t. its input at each row of x.
Tensor input_grad(const Mlp& net, const Tensor& x);

/// Mean over rows of (|grad_x D(x_hat)| - 1)^2 and its gradient w.r.t. D's
/// parameters, via double backprop. A zero input gradient contributes a
/// penalty of 1 with zero subgradient.
struct PenaltyResult {
  double penalty = 0.0;
  ParamGrads grads;
};
PenaltyResult grad_penalty_grads(const Mlp& disc, const Tensor& x_hat);

/// Records mean_rows (|grad_x out| - 1)^2 for a scalar-output `out` of input `x`.
Var gradient_penalty(Tape& tape, Var out, Var x);

}  // namespace ganland
