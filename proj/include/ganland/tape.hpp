#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ganland/tensor.hpp"

namespace ganland {

/// A non-finite value appeared in an op output.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
  friend bool operator==(Var, Var) = default;
};

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,    // a b
  kMatMulNT,  // a b^T
  kMatMulTN,  // a^T b
  kAddBias,   // a (n x m) + row vector b (1 x m)
  kAdd,
  kSub,
  kMul,
  kDivSafe,  // a / b, 0 where b == 0
  kScale,
  kAddScalar,
  kLeakyRelu,  // slope 0 is plain relu
  kActMask,    // 1 where a > 0 else slope; carries no gradient
  kTanh,
  kOneMinusSquare,
  kSquare,
  kSumAll,
  kSumRows,  // n x m -> 1 x m
  kSumCols,  // n x m -> n x 1
  kBroadcastRows,
  kBroadcastCols,
  kFill,     // 1 x 1 -> rows x cols
  kRowNorm,  // n x m -> n x 1 Euclidean norms
};

/// Append-only record of primitive ops over dense tensors.
///
/// Insertion order is a topological order. Gradients are produced by
/// appending the backward pass to the same tape as ordinary ops, so a
/// gradient can itself be differentiated (used by the gradient penalty).
/// A tape is not thread-safe; use one tape per thread.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var matmul_tn(Var a, Var b);
  Var add_bias(Var x, Var bias);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div_safe(Var a, Var b);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var relu(Var a) { return leaky_relu(a, 0.0); }
  Var leaky_relu(Var a, double slope);
  Var act_mask(Var a, double slope);
  Var tanh(Var a);
  Var one_minus_square(Var a);
  Var square(Var a);
  Var sum_all(Var a);
  Var mean_all(Var a);
  Var sum_rows(Var a);
  Var sum_cols(Var a);
  Var broadcast_rows(Var a, std::size_t rows);
  Var broadcast_cols(Var a, std::size_t cols);
  Var fill(Var scalar, std::size_t rows, std::size_t cols);
  Var row_norm(Var a);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Vector-Jacobian product of `output` with `seed` (ones of output's shape
  /// when omitted) for every var in `wrt`. Entries are nullopt when `output`
  /// does not depend on that var. With `create_graph` the returned vars are
  /// differentiable; otherwise they are recorded as constants.
  std::vector<std::optional<Var>> grad(Var output, std::span<const Var> wrt,
                                       std::optional<Var> seed = std::nullopt,
                                       bool create_graph = false);

  /// Recomputes every non-leaf node from its parents, in insertion order.
  std::vector<Tensor> replay() const;

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::size_t a = 0;
    std::size_t b = 0;
    double scalar = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    Tensor value;
    bool requires_grad = false;
  };

  Var push(Node node);
  Var unary(Op op, Var a, double scalar = 0.0, std::size_t rows = 0, std::size_t cols = 0);
  Var binary(Op op, Var a, Var b);
  void accumulate(std::vector<std::optional<Var>>& grads, std::size_t id, Var g);
  void backprop_node(std::size_t id, Var g, std::vector<std::optional<Var>>& grads,
                     const std::vector<char>& reach);

  static Tensor compute(const Node& node, const Tensor* a, const Tensor* b);

  std::vector<Node> nodes_;
};

}  // namespace ganland
