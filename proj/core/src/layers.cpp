#include "reveal/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace reveal::nn {

Tensor xavier_uniform(int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  const double limit = std::sqrt(6.0 / (rows + cols));
  for (double& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

GruParams GruParams::init(int hidden, int input, Rng& rng) {
  GruParams p;
  p.Wz = xavier_uniform(hidden, input, rng);
  p.Wr = xavier_uniform(hidden, input, rng);
  p.Wh = xavier_uniform(hidden, input, rng);
  p.Uz = xavier_uniform(hidden, hidden, rng);
  p.Ur = xavier_uniform(hidden, hidden, rng);
  p.Uh = xavier_uniform(hidden, hidden, rng);
  p.bz = Tensor(1, hidden);
  p.br = Tensor(1, hidden);
  p.bh = Tensor(1, hidden);
  return p;
}

GruParams GruParams::zeros(int hidden, int input) {
  GruParams p;
  p.Wz = Tensor(hidden, input);
  p.Wr = Tensor(hidden, input);
  p.Wh = Tensor(hidden, input);
  p.Uz = Tensor(hidden, hidden);
  p.Ur = Tensor(hidden, hidden);
  p.Uh = Tensor(hidden, hidden);
  p.bz = Tensor(1, hidden);
  p.br = Tensor(1, hidden);
  p.bh = Tensor(1, hidden);
  return p;
}

ParamRefs GruParams::params() {
  return {{"Wz", &Wz}, {"Wr", &Wr}, {"Wh", &Wh}, {"Uz", &Uz}, {"Ur", &Ur},
          {"Uh", &Uh}, {"bz", &bz}, {"br", &br}, {"bh", &bh}};
}

namespace {

inline double sigmoid_s(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Y += X(r x in) * W(out x in)^T + broadcast b
Tensor linear_nt(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols != w.cols) throw std::invalid_argument("dimension mismatch in linear layer");
  Tensor y(x.rows, w.rows);
  detail::gemm_nt(x.data.data(), w.data.data(), y.data.data(), x.rows, x.cols, w.rows);
  for (int i = 0; i < y.rows; ++i)
    for (int j = 0; j < y.cols; ++j) y.at(i, j) += b.data[j];
  return y;
}

}  // namespace

Tensor gru_forward(const GruParams& p, const Tensor& h, const Tensor& m) {
  if (h.rows != m.rows || h.cols != p.hidden() || m.cols != p.input())
    throw std::invalid_argument("dimension mismatch in gru_forward");
  Tensor z = linear_nt(m, p.Wz, p.bz);
  Tensor r = linear_nt(m, p.Wr, p.br);
  {
    Tensor zh(h.rows, h.cols), rh(h.rows, h.cols);
    detail::gemm_nt(h.data.data(), p.Uz.data.data(), zh.data.data(), h.rows, h.cols, p.Uz.rows);
    detail::gemm_nt(h.data.data(), p.Ur.data.data(), rh.data.data(), h.rows, h.cols, p.Ur.rows);
    for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = sigmoid_s(z.data[i] + zh.data[i]);
    for (std::size_t i = 0; i < r.size(); ++i) r.data[i] = sigmoid_s(r.data[i] + rh.data[i]);
  }
  Tensor rh = h;
  for (std::size_t i = 0; i < rh.size(); ++i) rh.data[i] *= r.data[i];
  Tensor cand = linear_nt(m, p.Wh, p.bh);
  {
    Tensor ch(h.rows, h.cols);
    detail::gemm_nt(rh.data.data(), p.Uh.data.data(), ch.data.data(), h.rows, h.cols, p.Uh.rows);
    for (std::size_t i = 0; i < cand.size(); ++i) cand.data[i] = std::tanh(cand.data[i] + ch.data[i]);
  }
  Tensor out(h.rows, h.cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = (1.0 - z.data[i]) * h.data[i] + z.data[i] * cand.data[i];
  return out;
}

std::vector<double> gru_cell(const GruParams& p, const std::vector<double>& h,
                             const std::vector<double>& m) {
  if (static_cast<int>(h.size()) != p.hidden() || static_cast<int>(m.size()) != p.input())
    throw std::invalid_argument("dimension mismatch in gru_cell");
  Tensor hr(1, static_cast<int>(h.size()), h);
  Tensor mr(1, static_cast<int>(m.size()), m);
  return gru_forward(p, hr, mr).data;
}

GruVars gru_leaves(Tape& t, GruParams& p) {
  GruVars v;
  v.Wz = t.leaf(p.Wz);
  v.Wr = t.leaf(p.Wr);
  v.Wh = t.leaf(p.Wh);
  v.Uz = t.leaf(p.Uz);
  v.Ur = t.leaf(p.Ur);
  v.Uh = t.leaf(p.Uh);
  v.bz = t.leaf(p.bz);
  v.br = t.leaf(p.br);
  v.bh = t.leaf(p.bh);
  return v;
}

Tape::Var gru_step(Tape& t, const GruVars& v, Tape::Var h, Tape::Var m) {
  Tape::Var z = t.sigmoid(t.add_rowvec(t.add(t.matmul_nt(m, v.Wz), t.matmul_nt(h, v.Uz)), v.bz));
  Tape::Var r = t.sigmoid(t.add_rowvec(t.add(t.matmul_nt(m, v.Wr), t.matmul_nt(h, v.Ur)), v.br));
  Tape::Var cand = t.tanh_(
      t.add_rowvec(t.add(t.matmul_nt(m, v.Wh), t.matmul_nt(t.mul(r, h), v.Uh)), v.bh));
  return t.add(t.mul(t.affine(z, -1.0, 1.0), h), t.mul(z, cand));
}

MlpParams MlpParams::init(int input, const std::vector<int>& hidden, int classes, double dropout,
                          Rng& rng) {
  if (hidden.empty()) throw std::invalid_argument("MLP needs at least one hidden layer");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0,1)");
  MlpParams p;
  p.dropout = dropout;
  int in = input;
  for (int h : hidden) {
    p.weights.push_back(xavier_uniform(h, in, rng));
    // slightly positive bias keeps ReLU rows alive at the start
    Tensor b(1, h);
    for (auto& v : b.data) v = 0.1;
    p.biases.push_back(std::move(b));
    in = h;
  }
  p.weights.push_back(xavier_uniform(classes, in, rng));
  p.biases.push_back(Tensor(1, classes));
  return p;
}

ParamRefs MlpParams::params() {
  ParamRefs refs;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    refs.emplace_back("W" + std::to_string(i), &weights[i]);
    refs.emplace_back("b" + std::to_string(i), &biases[i]);
  }
  return refs;
}

MlpOut mlp_forward(const MlpParams& p, const Tensor& x, bool training, Rng& rng) {
  if (x.cols != p.input_dim())
    throw std::invalid_argument("MLP input has length " + std::to_string(x.cols) + ", expected " +
                                std::to_string(p.input_dim()));
  Tensor a = x;
  const std::size_t n_hidden = p.weights.size() - 1;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    a = linear_nt(a, p.weights[l], p.biases[l]);
    for (double& v : a.data) v = v > 0.0 ? v : 0.0;
    if (training && p.dropout > 0.0) {
      const double keep_scale = 1.0 / (1.0 - p.dropout);
      for (double& v : a.data) v *= rng.uniform() < p.dropout ? 0.0 : keep_scale;
    }
  }
  MlpOut out;
  out.logits = linear_nt(a, p.weights.back(), p.biases.back());
  out.latent = std::move(a);
  return out;
}

MlpOut mlp_forward(const MlpParams& p, const Tensor& x) {
  Rng unused(0);
  return mlp_forward(p, x, false, unused);
}

MlpVars mlp_leaves(Tape& t, MlpParams& p) {
  MlpVars v;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    v.weights.push_back(t.leaf(p.weights[i]));
    v.biases.push_back(t.leaf(p.biases[i]));
  }
  return v;
}

MlpTapeOut mlp_graph(Tape& t, const MlpVars& v, Tape::Var x, double dropout, bool training,
                     Rng& rng) {
  Tape::Var a = x;
  const std::size_t n_hidden = v.weights.size() - 1;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    a = t.relu(t.add_rowvec(t.matmul_nt(a, v.weights[l]), v.biases[l]));
    if (training && dropout > 0.0) a = t.dropout(a, dropout, rng);
  }
  MlpTapeOut out;
  out.latent = a;
  out.logits = t.add_rowvec(t.matmul_nt(a, v.weights.back()), v.biases.back());
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      const double e = std::exp(logits.at(i, j) - mx);
      p.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < logits.cols; ++j) p.at(i, j) /= sum;
  }
  return p;
}

}  // namespace reveal::nn
