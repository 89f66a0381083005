#pragma once

#include <vector>

#include "reveal/nn/tensor.hpp"

namespace reveal::nn {

// Adam optimizer state: first/second moment estimates plus the step count
// used by bias correction.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;

  static AdamState like(const std::vector<Tensor*>& params);
  bool empty() const { return m.empty(); }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update, in place. params/grads/state must agree
// in count and shape; mismatch is an error.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg);

}  // namespace reveal::nn
