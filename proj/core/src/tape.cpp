#include "reveal/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace reveal::nn {

namespace {

void check_shape(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("dimension mismatch in ") + what);
}

}  // namespace

Tape::Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

bool Tape::needs(Var a, Var b) const {
  bool r = a >= 0 && nodes_[a].requires_grad;
  if (b >= 0) r = r || nodes_[b].requires_grad;
  return r;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[v];
  if (n.grad.data.empty()) throw std::logic_error("gradient not computed for this node");
  return n.grad;
}

Tape::Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::matmul(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  check_shape(A.cols == B.rows, "matmul");
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.requires_grad = needs(a, b);
  n.value = Tensor(A.rows, B.cols);
  detail::gemm_nn(A.data.data(), B.data.data(), n.value.data.data(), A.rows, A.cols, B.cols);
  return push(std::move(n));
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  check_shape(A.cols == B.cols, "matmul_nt");
  Node n;
  n.op = Op::kMatmulNT;
  n.a = a;
  n.b = b;
  n.requires_grad = needs(a, b);
  n.value = Tensor(A.rows, B.rows);
  detail::gemm_nt(A.data.data(), B.data.data(), n.value.data.data(), A.rows, A.cols, B.rows);
  return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  check_shape(A.same_shape(B), "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.requires_grad = needs(a, b);
  n.value = A;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] += B.data[i];
  return push(std::move(n));
}

Tape::Var Tape::sub(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  check_shape(A.same_shape(B), "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.requires_grad = needs(a, b);
  n.value = A;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] -= B.data[i];
  return push(std::move(n));
}

Tape::Var Tape::mul(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  check_shape(A.same_shape(B), "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.requires_grad = needs(a, b);
  n.value = A;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] *= B.data[i];
  return push(std::move(n));
}

Tape::Var Tape::div(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  check_shape(A.same_shape(B), "div");
  Node n;
  n.op = Op::kDiv;
  n.a = a;
  n.b = b;
  n.requires_grad = needs(a, b);
  n.value = A;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] /= B.data[i];
  return push(std::move(n));
}

Tape::Var Tape::add_rowvec(Var x, Var b) {
  const Tensor& X = nodes_[x].value;
  const Tensor& B = nodes_[b].value;
  check_shape(B.rows == 1 && B.cols == X.cols, "add_rowvec");
  Node n;
  n.op = Op::kAddRowvec;
  n.a = x;
  n.b = b;
  n.requires_grad = needs(x, b);
  n.value = X;
  for (int i = 0; i < X.rows; ++i)
    for (int j = 0; j < X.cols; ++j) n.value.at(i, j) += B.data[j];
  return push(std::move(n));
}

Tape::Var Tape::add_outer(Var x, std::vector<double> u, Var b) {
  const Tensor& X = nodes_[x].value;
  const Tensor& B = nodes_[b].value;
  check_shape(B.rows == 1 && B.cols == X.cols, "add_outer");
  check_shape(static_cast<int>(u.size()) == X.rows, "add_outer");
  Node n;
  n.op = Op::kAddOuter;
  n.a = x;
  n.b = b;
  n.requires_grad = needs(x, b);
  n.value = X;
  for (int i = 0; i < X.rows; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    for (int j = 0; j < X.cols; ++j) n.value.at(i, j) += ui * B.data[j];
  }
  n.aux = std::move(u);
  return push(std::move(n));
}

Tape::Var Tape::affine(Var x, double k, double c) {
  Node n;
  n.op = Op::kAffine;
  n.a = x;
  n.requires_grad = needs(x);
  n.k = k;
  n.c = c;
  n.value = nodes_[x].value;
  for (double& v : n.value.data) v = k * v + c;
  return push(std::move(n));
}

Tape::Var Tape::sigmoid(Var x) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = nodes_[x].value;
  for (double& v : n.value.data) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(n));
}

Tape::Var Tape::tanh_(Var x) {
  Node n;
  n.op = Op::kTanh;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = nodes_[x].value;
  for (double& v : n.value.data) v = std::tanh(v);
  return push(std::move(n));
}

Tape::Var Tape::relu(Var x) {
  Node n;
  n.op = Op::kRelu;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = nodes_[x].value;
  for (double& v : n.value.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Tape::Var Tape::sqrt_(Var x) {
  Node n;
  n.op = Op::kSqrt;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = nodes_[x].value;
  for (double& v : n.value.data) v = std::sqrt(v);
  return push(std::move(n));
}

Tape::Var Tape::abs_(Var x) {
  Node n;
  n.op = Op::kAbs;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = nodes_[x].value;
  for (double& v : n.value.data) v = std::fabs(v);
  return push(std::move(n));
}

Tape::Var Tape::dropout(Var x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout probability must be in [0,1)");
  Node n;
  n.op = Op::kDropout;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = nodes_[x].value;
  n.aux.resize(n.value.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    const double m = rng.uniform() < p ? 0.0 : keep_scale;
    n.aux[i] = m;
    n.value.data[i] *= m;
  }
  return push(std::move(n));
}

Tape::Var Tape::row_dot(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  check_shape(A.same_shape(B), "row_dot");
  Node n;
  n.op = Op::kRowDot;
  n.a = a;
  n.b = b;
  n.requires_grad = needs(a, b);
  n.value = Tensor(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < A.cols; ++j) acc += A.at(i, j) * B.at(i, j);
    n.value.at(i, 0) = acc;
  }
  return push(std::move(n));
}

Tape::Var Tape::col_sum(Var x) {
  const Tensor& X = nodes_[x].value;
  Node n;
  n.op = Op::kColSum;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = Tensor(1, X.cols);
  for (int i = 0; i < X.rows; ++i)
    for (int j = 0; j < X.cols; ++j) n.value.data[j] += X.at(i, j);
  return push(std::move(n));
}

Tape::Var Tape::mean_all(Var x) {
  const Tensor& X = nodes_[x].value;
  if (X.size() == 0) throw std::invalid_argument("mean of empty tensor");
  Node n;
  n.op = Op::kMeanAll;
  n.a = x;
  n.requires_grad = needs(x);
  n.value = Tensor(1, 1);
  double acc = 0.0;
  for (double v : X.data) acc += v;
  n.value.data[0] = acc / static_cast<double>(X.size());
  return push(std::move(n));
}

Tape::Var Tape::softmax_ce(Var logits, std::vector<int> labels) {
  const Tensor& L = nodes_[logits].value;
  check_shape(static_cast<int>(labels.size()) == L.rows, "softmax_ce");
  for (int y : labels)
    if (y < 0 || y >= L.cols) throw std::invalid_argument("softmax_ce: label out of range");
  Node n;
  n.op = Op::kSoftmaxCE;
  n.a = logits;
  n.requires_grad = needs(logits);
  n.value = Tensor(L.rows, 1);
  for (int i = 0; i < L.rows; ++i) {
    double mx = L.at(i, 0);
    for (int j = 1; j < L.cols; ++j) mx = std::max(mx, L.at(i, j));
    double lse = 0.0;
    for (int j = 0; j < L.cols; ++j) lse += std::exp(L.at(i, j) - mx);
    lse = mx + std::log(lse);
    n.value.at(i, 0) = lse - L.at(i, labels[i]);
  }
  n.labels = std::move(labels);
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  Node& top = nodes_[loss];
  if (top.value.rows != 1 || top.value.cols != 1)
    throw std::invalid_argument("backward expects a scalar loss");
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor(n.value.rows, n.value.cols);
  }
  if (!top.requires_grad) return;
  top.grad.data[0] = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.op != Op::kLeaf) backprop(n);
  }
}

void Tape::backprop(Node& n) {
  const Tensor& g = n.grad;
  Tensor* ga = (n.a >= 0 && nodes_[n.a].requires_grad) ? &nodes_[n.a].grad : nullptr;
  Tensor* gb = (n.b >= 0 && nodes_[n.b].requires_grad) ? &nodes_[n.b].grad : nullptr;
  const Tensor* va = n.a >= 0 ? &nodes_[n.a].value : nullptr;
  const Tensor* vb = n.b >= 0 ? &nodes_[n.b].value : nullptr;

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatmul:
      if (ga) detail::gemm_nt(g.data.data(), vb->data.data(), ga->data.data(), g.rows, g.cols, vb->rows);
      if (gb) detail::gemm_tn(va->data.data(), g.data.data(), gb->data.data(), va->rows, va->cols, g.cols);
      break;
    case Op::kMatmulNT:
      if (ga) detail::gemm_nn(g.data.data(), vb->data.data(), ga->data.data(), g.rows, g.cols, vb->cols);
      if (gb) detail::gemm_tn(g.data.data(), va->data.data(), gb->data.data(), g.rows, g.cols, va->cols);
      break;
    case Op::kAdd:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += g.data[i];
      if (gb)
        for (std::size_t i = 0; i < g.size(); ++i) gb->data[i] += g.data[i];
      break;
    case Op::kSub:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += g.data[i];
      if (gb)
        for (std::size_t i = 0; i < g.size(); ++i) gb->data[i] -= g.data[i];
      break;
    case Op::kMul:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += g.data[i] * vb->data[i];
      if (gb)
        for (std::size_t i = 0; i < g.size(); ++i) gb->data[i] += g.data[i] * va->data[i];
      break;
    case Op::kDiv:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += g.data[i] / vb->data[i];
      if (gb)
        for (std::size_t i = 0; i < g.size(); ++i)
          gb->data[i] -= g.data[i] * n.value.data[i] / vb->data[i];
      break;
    case Op::kAddRowvec:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += g.data[i];
      if (gb)
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) gb->data[j] += g.at(i, j);
      break;
    case Op::kAddOuter:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += g.data[i];
      if (gb)
        for (int i = 0; i < g.rows; ++i) {
          const double ui = n.aux[i];
          if (ui == 0.0) continue;
          for (int j = 0; j < g.cols; ++j) gb->data[j] += ui * g.at(i, j);
        }
      break;
    case Op::kAffine:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += n.k * g.data[i];
      break;
    case Op::kSigmoid:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = n.value.data[i];
          ga->data[i] += g.data[i] * s * (1.0 - s);
        }
      break;
    case Op::kTanh:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double t = n.value.data[i];
          ga->data[i] += g.data[i] * (1.0 - t * t);
        }
      break;
    case Op::kRelu:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i)
          ga->data[i] += va->data[i] > 0.0 ? g.data[i] : 0.0;
      break;
    case Op::kSqrt:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i)
          ga->data[i] += g.data[i] * 0.5 / n.value.data[i];
      break;
    case Op::kAbs:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double x = va->data[i];
          ga->data[i] += x > 0.0 ? g.data[i] : (x < 0.0 ? -g.data[i] : 0.0);
        }
      break;
    case Op::kDropout:
      if (ga)
        for (std::size_t i = 0; i < g.size(); ++i) ga->data[i] += g.data[i] * n.aux[i];
      break;
    case Op::kRowDot:
      if (ga)
        for (int i = 0; i < va->rows; ++i) {
          const double gi = g.at(i, 0);
          for (int j = 0; j < va->cols; ++j) ga->at(i, j) += gi * vb->at(i, j);
        }
      if (gb)
        for (int i = 0; i < va->rows; ++i) {
          const double gi = g.at(i, 0);
          for (int j = 0; j < va->cols; ++j) gb->at(i, j) += gi * va->at(i, j);
        }
      break;
    case Op::kColSum:
      if (ga)
        for (int i = 0; i < ga->rows; ++i)
          for (int j = 0; j < ga->cols; ++j) ga->at(i, j) += g.data[j];
      break;
    case Op::kMeanAll:
      if (ga) {
        const double s = g.data[0] / static_cast<double>(ga->size());
        for (std::size_t i = 0; i < ga->size(); ++i) ga->data[i] += s;
      }
      break;
    case Op::kSoftmaxCE:
      if (ga) {
        for (int i = 0; i < va->rows; ++i) {
          const double gi = g.at(i, 0);
          double mx = va->at(i, 0);
          for (int j = 1; j < va->cols; ++j) mx = std::max(mx, va->at(i, j));
          double lse = 0.0;
          for (int j = 0; j < va->cols; ++j) lse += std::exp(va->at(i, j) - mx);
          for (int j = 0; j < va->cols; ++j) {
            const double p = std::exp(va->at(i, j) - mx) / lse;
            ga->at(i, j) += gi * (p - (j == n.labels[i] ? 1.0 : 0.0));
          }
        }
      }
      break;
  }
}

}  // namespace reveal::nn
