#include "reveal/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace reveal::nn {

AdamState AdamState::like(const std::vector<Tensor*>& params) {
  AdamState s;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->rows, p->cols);
    s.v.emplace_back(p->rows, p->cols);
  }
  return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (!p.same_shape(g) || !p.same_shape(m))
      throw std::invalid_argument("adam_step: shape mismatch at parameter " + std::to_string(i));
    for (std::size_t j = 0; j < p.size(); ++j) {
      m.data[j] = cfg.beta1 * m.data[j] + (1.0 - cfg.beta1) * g.data[j];
      v.data[j] = cfg.beta2 * v.data[j] + (1.0 - cfg.beta2) * g.data[j] * g.data[j];
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      p.data[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace reveal::nn
