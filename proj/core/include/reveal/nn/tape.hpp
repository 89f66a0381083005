#pragma once

#include <vector>

#include "reveal/nn/tensor.hpp"
#include "reveal/rng.hpp"

namespace reveal::nn {

// Reverse-mode gradient tape over dense matrices (a Wengert list).
// Values are computed eagerly as ops are recorded; backward() walks the
// list in reverse. One tape per forward pass; cheap to discard.
class Tape {
 public:
  using Var = int;

  // Leaves. Constants never receive gradients.
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(Var v) const { return nodes_[v].value; }
  const Tensor& grad(Var v) const;

  // A(r x k) * B(k x c)
  Var matmul(Var a, Var b);
  // A(r x k) * B(c x k)^T; the layer convention for [out x in] weights
  Var matmul_nt(Var a, Var b);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);

  // X(r x c) + broadcast row b(1 x c)
  Var add_rowvec(Var x, Var b);
  // X(r x c) + u (x) b for a constant column weight u(r); accumulates the
  // per-row bias multiplicity (e.g. edge counts) into a shared bias row
  Var add_outer(Var x, std::vector<double> u, Var b);
  // k * X + c, elementwise
  Var affine(Var x, double k, double c);

  Var sigmoid(Var x);
  Var tanh_(Var x);
  Var relu(Var x);
  Var sqrt_(Var x);
  Var abs_(Var x);

  // Inverted-scaling dropout: keeps a unit with probability 1-p and
  // multiplies it by 1/(1-p), so inference needs no rescaling.
  Var dropout(Var x, double p, Rng& rng);

  // Row-wise dot products of equally shaped matrices -> (r x 1)
  Var row_dot(Var a, Var b);
  // Column sums -> (1 x c)
  Var col_sum(Var x);
  // Mean over all entries -> (1 x 1)
  Var mean_all(Var x);

  // Per-row softmax cross-entropy against integer class labels -> (r x 1),
  // computed via log-sum-exp for stability.
  Var softmax_ce(Var logits, std::vector<int> labels);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node
  // that (transitively) requires them. loss must be 1 x 1.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    kLeaf, kMatmul, kMatmulNT, kAdd, kSub, kMul, kDiv, kAddRowvec, kAddOuter,
    kAffine, kSigmoid, kTanh, kRelu, kSqrt, kAbs, kDropout, kRowDot, kColSum,
    kMeanAll, kSoftmaxCE,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    double k = 0.0;
    double c = 0.0;
    std::vector<double> aux;   // dropout mask / outer weights
    std::vector<int> labels;   // softmax targets
  };

  Var push(Node n);
  bool needs(Var a, Var b = -1) const;
  void backprop(Node& n);

  std::vector<Node> nodes_;
};

}  // namespace reveal::nn
