#include "reveal/nn/grad_check.hpp"

#include <cmath>
#include <stdexcept>

#include "reveal/rng.hpp"

namespace reveal::nn {

namespace {

double eval_loss(const std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)>& build,
                 std::vector<Tensor>& params) {
  Tape t;
  std::vector<Tape::Var> leaves;
  leaves.reserve(params.size());
  for (Tensor& p : params) leaves.push_back(t.constant(p));
  const Tape::Var loss = build(t, leaves);
  const double v = t.value(loss).data[0];
  if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite loss");
  return v;
}

}  // namespace

double grad_check(const std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)>& build,
                  std::vector<Tensor>& params, const GradCheckOptions& opts) {
  // analytic gradients
  std::vector<Tensor> analytic;
  {
    Tape t;
    std::vector<Tape::Var> leaves;
    for (Tensor& p : params) leaves.push_back(t.leaf(p));
    const Tape::Var loss = build(t, leaves);
    if (!std::isfinite(t.value(loss).data[0]))
      throw std::runtime_error("grad_check: non-finite loss");
    t.backward(loss);
    for (Tape::Var v : leaves) analytic.push_back(t.grad(v));
  }

  std::size_t total = 0;
  for (const Tensor& p : params) total += p.size();
  if (total == 0) throw std::invalid_argument("grad_check: no parameters");

  Rng rng(opts.seed);
  const std::size_t n_probe = std::min<std::size_t>(total, static_cast<std::size_t>(opts.samples));

  double max_rel = 0.0;
  for (std::size_t probe = 0; probe < n_probe; ++probe) {
    std::size_t flat = n_probe == total ? probe : rng.index(total);
    std::size_t pi = 0;
    while (flat >= params[pi].size()) {
      flat -= params[pi].size();
      ++pi;
    }
    double& coord = params[pi].data[flat];
    const double keep = coord;
    coord = keep + opts.step;
    const double up = eval_loss(build, params);
    coord = keep - opts.step;
    const double down = eval_loss(build, params);
    coord = keep;
    const double fd = (up - down) / (2.0 * opts.step);
    const double ad = analytic[pi].data[flat];
    const double denom = std::max({std::fabs(ad), std::fabs(fd), 1e-6});
    max_rel = std::max(max_rel, std::fabs(ad - fd) / denom);
  }
  return max_rel;
}

}  // namespace reveal::nn
