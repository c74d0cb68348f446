#include "ganland/tape.hpp"

#include <cmath>
#include <string>

namespace ganland {
namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kMatMulNT: return "matmul_nt";
    case Op::kMatMulTN: return "matmul_tn";
    case Op::kAddBias: return "add_bias";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDivSafe: return "div_safe";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kActMask: return "act_mask";
    case Op::kTanh: return "tanh";
    case Op::kOneMinusSquare: return "one_minus_square";
    case Op::kSquare: return "square";
    case Op::kSumAll: return "sum_all";
    case Op::kSumRows: return "sum_rows";
    case Op::kSumCols: return "sum_cols";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kBroadcastCols: return "broadcast_cols";
    case Op::kFill: return "fill";
    case Op::kRowNorm: return "row_norm";
  }
  return "?";
}

bool is_binary(Op op) {
  switch (op) {
    case Op::kMatMul:
    case Op::kMatMulNT:
    case Op::kMatMulTN:
    case Op::kAddBias:
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDivSafe:
      return true;
    default:
      return false;
  }
}

void require_same(const Tensor& a, const Tensor& b, Op op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op_name(op)) + ": shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
  }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Tensor Tape::compute(const Node& node, const Tensor* pa, const Tensor* pb) {
  const Tensor& a = *pa;
  switch (node.op) {
    case Op::kLeaf:
      return node.value;
    case Op::kMatMul: {
      const Tensor& b = *pb;
      if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape_string() + " x " + b.shape_string());
      }
      Tensor out(a.rows(), b.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
          const double aik = a(i, k);
          for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
      }
      return out;
    }
    case Op::kMatMulNT: {
      const Tensor& b = *pb;
      if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: " + a.shape_string() + " x " + b.shape_string() + "^T");
      }
      Tensor out(a.rows(), b.rows());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
          out(i, j) = acc;
        }
      }
      return out;
    }
    case Op::kMatMulTN: {
      const Tensor& b = *pb;
      if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: " + a.shape_string() + "^T x " + b.shape_string());
      }
      Tensor out(a.cols(), b.cols());
      for (std::size_t k = 0; k < a.rows(); ++k) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
          const double aki = a(k, i);
          for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
        }
      }
      return out;
    }
    case Op::kAddBias: {
      const Tensor& b = *pb;
      if (b.rows() != 1 || b.cols() != a.cols()) {
        throw DimensionError("add_bias: " + a.shape_string() + " + " + b.shape_string());
      }
      Tensor out = a;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += b(0, j);
      }
      return out;
    }
    case Op::kAdd:
      require_same(a, *pb, node.op);
      return zip(a, *pb, [](double x, double y) { return x + y; });
    case Op::kSub:
      require_same(a, *pb, node.op);
      return zip(a, *pb, [](double x, double y) { return x - y; });
    case Op::kMul:
      require_same(a, *pb, node.op);
      return zip(a, *pb, [](double x, double y) { return x * y; });
    case Op::kDivSafe:
      require_same(a, *pb, node.op);
      return zip(a, *pb, [](double x, double y) { return y == 0.0 ? 0.0 : x / y; });
    case Op::kScale: {
      const double c = node.scalar;
      return map(a, [c](double x) { return c * x; });
    }
    case Op::kAddScalar: {
      const double c = node.scalar;
      return map(a, [c](double x) { return x + c; });
    }
    case Op::kLeakyRelu: {
      const double s = node.scalar;
      return map(a, [s](double x) { return x > 0.0 ? x : s * x; });
    }
    case Op::kActMask: {
      const double s = node.scalar;
      return map(a, [s](double x) { return x > 0.0 ? 1.0 : s; });
    }
    case Op::kTanh:
      return map(a, [](double x) { return std::tanh(x); });
    case Op::kOneMinusSquare:
      return map(a, [](double x) { return 1.0 - x * x; });
    case Op::kSquare:
      return map(a, [](double x) { return x * x; });
    case Op::kSumAll: {
      double acc = 0.0;
      for (double v : a.data()) acc += v;
      return Tensor::scalar(acc);
    }
    case Op::kSumRows: {
      Tensor out(1, a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += a(i, j);
      }
      return out;
    }
    case Op::kSumCols: {
      Tensor out(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j);
        out(i, 0) = acc;
      }
      return out;
    }
    case Op::kBroadcastRows: {
      if (a.rows() != 1) throw DimensionError("broadcast_rows needs a row vector");
      Tensor out(node.rows, a.cols());
      for (std::size_t i = 0; i < node.rows; ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(0, j);
      }
      return out;
    }
    case Op::kBroadcastCols: {
      if (a.cols() != 1) throw DimensionError("broadcast_cols needs a column vector");
      Tensor out(a.rows(), node.cols);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < node.cols; ++j) out(i, j) = a(i, 0);
      }
      return out;
    }
    case Op::kFill:
      return Tensor(node.rows, node.cols, a.item());
    case Op::kRowNorm: {
      Tensor out(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
        out(i, 0) = std::sqrt(acc);
      }
      return out;
    }
  }
  throw ContractError("unknown op");
}

Var Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw NumericError(std::string("non-finite output from ") + op_name(node.op) + " at node " +
                       std::to_string(nodes_.size()));
  }
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::unary(Op op, Var a, double scalar, std::size_t rows, std::size_t cols) {
  Node n;
  n.op = op;
  n.a = a.id;
  n.scalar = scalar;
  n.rows = rows;
  n.cols = cols;
  n.requires_grad = op != Op::kActMask && nodes_.at(a.id).requires_grad;
  n.value = compute(n, &nodes_[a.id].value, nullptr);
  return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b) {
  Node n;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = nodes_.at(a.id).requires_grad || nodes_.at(b.id).requires_grad;
  n.value = compute(n, &nodes_[a.id].value, &nodes_[b.id].value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) { return binary(Op::kMatMul, a, b); }
Var Tape::matmul_nt(Var a, Var b) { return binary(Op::kMatMulNT, a, b); }
Var Tape::matmul_tn(Var a, Var b) { return binary(Op::kMatMulTN, a, b); }
Var Tape::add_bias(Var x, Var bias) { return binary(Op::kAddBias, x, bias); }
Var Tape::add(Var a, Var b) { return binary(Op::kAdd, a, b); }
Var Tape::sub(Var a, Var b) { return binary(Op::kSub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(Op::kMul, a, b); }
Var Tape::div_safe(Var a, Var b) { return binary(Op::kDivSafe, a, b); }
Var Tape::scale(Var a, double c) { return unary(Op::kScale, a, c); }
Var Tape::add_scalar(Var a, double c) { return unary(Op::kAddScalar, a, c); }
Var Tape::leaky_relu(Var a, double slope) { return unary(Op::kLeakyRelu, a, slope); }
Var Tape::act_mask(Var a, double slope) { return unary(Op::kActMask, a, slope); }
Var Tape::tanh(Var a) { return unary(Op::kTanh, a); }
Var Tape::one_minus_square(Var a) { return unary(Op::kOneMinusSquare, a); }
Var Tape::square(Var a) { return unary(Op::kSquare, a); }
Var Tape::sum_all(Var a) { return unary(Op::kSumAll, a); }
Var Tape::mean_all(Var a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(value(a).size()));
}
Var Tape::sum_rows(Var a) { return unary(Op::kSumRows, a); }
Var Tape::sum_cols(Var a) { return unary(Op::kSumCols, a); }
Var Tape::broadcast_rows(Var a, std::size_t rows) { return unary(Op::kBroadcastRows, a, 0.0, rows, 0); }
Var Tape::broadcast_cols(Var a, std::size_t cols) { return unary(Op::kBroadcastCols, a, 0.0, 0, cols); }
Var Tape::fill(Var scalar, std::size_t rows, std::size_t cols) {
  return unary(Op::kFill, scalar, 0.0, rows, cols);
}
Var Tape::row_norm(Var a) { return unary(Op::kRowNorm, a); }

void Tape::accumulate(std::vector<std::optional<Var>>& grads, std::size_t id, Var g) {
  auto& slot = grads[id];
  slot = slot ? add(*slot, g) : g;
}

// Each VJP is written in terms of tape ops so that it is itself differentiable.
void Tape::backprop_node(std::size_t id, Var g, std::vector<std::optional<Var>>& grads,
                         const std::vector<char>& reach) {
  // Copy the fields we need: pushing new nodes may reallocate nodes_.
  const Op op = nodes_[id].op;
  const Var a{nodes_[id].a};
  const Var b{nodes_[id].b};
  const double s = nodes_[id].scalar;
  const Var y{id};
  const bool ga = op != Op::kLeaf && reach[a.id] && nodes_[a.id].requires_grad;
  const bool gb = is_binary(op) && reach[b.id] && nodes_[b.id].requires_grad;

  switch (op) {
    case Op::kLeaf:
    case Op::kActMask:
      return;
    case Op::kMatMul:
      if (ga) accumulate(grads, a.id, matmul_nt(g, b));
      if (gb) accumulate(grads, b.id, matmul_tn(a, g));
      return;
    case Op::kMatMulNT:  // y = a b^T: da = g b, db = g^T a
      if (ga) accumulate(grads, a.id, matmul(g, b));
      if (gb) accumulate(grads, b.id, matmul_tn(g, a));
      return;
    case Op::kMatMulTN:  // y = a^T b: da = b g^T, db = a g
      if (ga) accumulate(grads, a.id, matmul_nt(b, g));
      if (gb) accumulate(grads, b.id, matmul(a, g));
      return;
    case Op::kAddBias:
      if (ga) accumulate(grads, a.id, g);
      if (gb) accumulate(grads, b.id, sum_rows(g));
      return;
    case Op::kAdd:
      if (ga) accumulate(grads, a.id, g);
      if (gb) accumulate(grads, b.id, g);
      return;
    case Op::kSub:
      if (ga) accumulate(grads, a.id, g);
      if (gb) accumulate(grads, b.id, scale(g, -1.0));
      return;
    case Op::kMul:
      if (ga) accumulate(grads, a.id, mul(g, b));
      if (gb) accumulate(grads, b.id, mul(g, a));
      return;
    case Op::kDivSafe:
      if (ga) accumulate(grads, a.id, div_safe(g, b));
      if (gb) accumulate(grads, b.id, scale(div_safe(mul(g, a), square(b)), -1.0));
      return;
    case Op::kScale:
      if (ga) accumulate(grads, a.id, scale(g, s));
      return;
    case Op::kAddScalar:
      if (ga) accumulate(grads, a.id, g);
      return;
    case Op::kLeakyRelu:
      if (ga) accumulate(grads, a.id, mul(g, act_mask(a, s)));
      return;
    case Op::kTanh:
      if (ga) accumulate(grads, a.id, mul(g, one_minus_square(y)));
      return;
    case Op::kOneMinusSquare:
      if (ga) accumulate(grads, a.id, mul(g, scale(a, -2.0)));
      return;
    case Op::kSquare:
      if (ga) accumulate(grads, a.id, mul(g, scale(a, 2.0)));
      return;
    case Op::kSumAll: {
      const Tensor& av = nodes_[a.id].value;
      if (ga) accumulate(grads, a.id, fill(g, av.rows(), av.cols()));
      return;
    }
    case Op::kSumRows:
      if (ga) accumulate(grads, a.id, broadcast_rows(g, nodes_[a.id].value.rows()));
      return;
    case Op::kSumCols:
      if (ga) accumulate(grads, a.id, broadcast_cols(g, nodes_[a.id].value.cols()));
      return;
    case Op::kBroadcastRows:
      if (ga) accumulate(grads, a.id, sum_rows(g));
      return;
    case Op::kBroadcastCols:
      if (ga) accumulate(grads, a.id, sum_cols(g));
      return;
    case Op::kFill:
      if (ga) accumulate(grads, a.id, sum_all(g));
      return;
    case Op::kRowNorm: {
      // d|a_i| / da_i = a_i / |a_i|, taken as 0 at a_i = 0.
      if (ga) {
        const std::size_t cols = nodes_[a.id].value.cols();
        accumulate(grads, a.id, mul(broadcast_cols(div_safe(g, y), cols), a));
      }
      return;
    }
  }
}

std::vector<std::optional<Var>> Tape::grad(Var output, std::span<const Var> wrt,
                                           std::optional<Var> seed, bool create_graph) {
  const std::size_t n = nodes_.size();
  if (output.id >= n) throw ContractError("grad: output var not on this tape");
  if (!seed) seed = constant(Tensor(value(output).rows(), value(output).cols(), 1.0));
  if (!value(*seed).same_shape(value(output))) {
    throw DimensionError("grad: seed shape " + value(*seed).shape_string() +
                         " does not match output " + value(output).shape_string());
  }

  // Only nodes from which some wrt var is reachable need a gradient.
  std::vector<char> reach(n, 0);
  for (Var w : wrt) {
    if (w.id >= n) throw ContractError("grad: wrt var not on this tape");
    reach[w.id] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = nodes_[i];
    if (node.op == Op::kLeaf || reach[i]) continue;
    reach[i] = reach[node.a] || (is_binary(node.op) && reach[node.b]);
  }

  std::vector<std::optional<Var>> grads(n);
  grads[output.id] = *seed;
  const std::size_t first_new = nodes_.size();
  for (std::size_t i = output.id + 1; i-- > 0;) {
    if (!grads[i] || !nodes_[i].requires_grad || !reach[i]) continue;
    backprop_node(i, *grads[i], grads, reach);
  }
  if (!create_graph) {
    for (std::size_t i = first_new; i < nodes_.size(); ++i) nodes_[i].requires_grad = false;
  }

  std::vector<std::optional<Var>> out;
  out.reserve(wrt.size());
  for (Var w : wrt) out.push_back(grads[w.id]);
  return out;
}

std::vector<Tensor> Tape::replay() const {
  std::vector<Tensor> values;
  values.reserve(nodes_.size());
  for (const Node& node : nodes_) {
    if (node.op == Op::kLeaf) {
      values.push_back(node.value);
      continue;
    }
    values.push_back(compute(node, &values[node.a], is_binary(node.op) ? &values[node.b] : nullptr));
  }
  return values;
}

}  // namespace ganland
