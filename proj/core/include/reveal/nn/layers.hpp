#pragma once

#include <string>
#include <utility>
#include <vector>

#include "reveal/nn/tape.hpp"
#include "reveal/nn/tensor.hpp"
#include "reveal/rng.hpp"

namespace reveal::nn {

// Xavier-uniform init over [-limit, limit], limit = sqrt(6/(fan_in+fan_out)).
Tensor xavier_uniform(int rows, int cols, Rng& rng);

// Named views over a parameter set; the unit Adam and checkpointing work in.
using ParamRefs = std::vector<std::pair<std::string, Tensor*>>;

// Gated recurrent unit:
//   z = sigmoid(Wz m + Uz h + bz)
//   r = sigmoid(Wr m + Ur h + br)
//   hcand = tanh(Wh m + Uh (r . h) + bh)
//   h' =(1-z) . h + z . hcand
struct GruParams {
  Tensor Wz, Wr, Wh;  // [hidden x input]
  Tensor Uz, Ur, Uh;  // [hidden x hidden]
  Tensor bz, br, bh;  // [1 x hidden]

  static GruParams init(int hidden, int input, Rng& rng);
  static GruParams zeros(int hidden, int input);
  int hidden() const { return Uz.rows; }
  int input() const { return Wz.cols; }
  ParamRefs params();
};

// Row-batched forward: h and m are (rows x hidden)/(rows x input).
Tensor gru_forward(const GruParams& p, const Tensor& h, const Tensor& m);

// Single-state convenience wrapper.
std::vector<double> gru_cell(const GruParams& p, const std::vector<double>& h,
                             const std::vector<double>& m);

// Leaf variables for one GRU parameter set on a tape.
struct GruVars {
  Tape::Var Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;
};
GruVars gru_leaves(Tape& t, GruParams& p);
Tape::Var gru_step(Tape& t, const GruVars& v, Tape::Var h, Tape::Var m);

// Multi-layer perceptron with ReLU hidden layers and a linear class head.
// The latent representation is the last hidden layer's activation.
struct MlpParams {
  std::vector<Tensor> weights;  // [out x in] per layer; last layer is the head
  std::vector<Tensor> biases;   // [1 x out]
  double dropout = 0.2;

  static MlpParams init(int input, const std::vector<int>& hidden, int classes, double dropout,
                        Rng& rng);
  int input_dim() const { return weights.front().cols; }
  int latent_dim() const { return weights[weights.size() - 2].rows; }
  int classes() const { return weights.back().rows; }
  ParamRefs params();
};

struct MlpOut {
  Tensor latent;  // (rows x latent_dim)
  Tensor logits;  // (rows x classes)
};

// Plain row-batched forward. Dropout fires only when training is true.
MlpOut mlp_forward(const MlpParams& p, const Tensor& x, bool training, Rng& rng);
MlpOut mlp_forward(const MlpParams& p, const Tensor& x);

struct MlpVars {
  std::vector<Tape::Var> weights;
  std::vector<Tape::Var> biases;
};
MlpVars mlp_leaves(Tape& t, MlpParams& p);

struct MlpTapeOut {
  Tape::Var latent;
  Tape::Var logits;
};
MlpTapeOut mlp_graph(Tape& t, const MlpVars& v, Tape::Var x, double dropout, bool training,
                     Rng& rng);

// Row-wise softmax (plain helper for inference paths).
Tensor softmax_rows(const Tensor& logits);

}  // namespace reveal::nn
