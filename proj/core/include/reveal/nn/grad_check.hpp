#pragma once

#include <functional>
#include <vector>

#include "reveal/nn/tape.hpp"
#include "reveal/nn/tensor.hpp"

namespace reveal::nn {

struct GradCheckOptions {
  int samples = 200;     // coordinates probed (all, when fewer exist)
  double step = 1e-5;    // central-difference step
  std::uint64_t seed = 0x5eed;
};

// Builds the loss once with leaves for `params`, backpropagates, then
// probes a random sample of parameter coordinates with central finite
// differences. Returns the max relative error between the reverse-mode
// gradient and the difference quotient. The builder must be a pure
// function of the tape and the parameter leaves. Non-finite losses are
// an error.
double grad_check(const std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)>& build_loss,
                  std::vector<Tensor>& params, const GradCheckOptions& opts = {});

}  // namespace reveal::nn
