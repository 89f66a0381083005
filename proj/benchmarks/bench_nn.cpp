#include <benchmark/benchmark.h>

#include "reveal/nn/layers.hpp"
#include "reveal/nn/tape.hpp"
#include "reveal/rng.hpp"

using namespace reveal;
using nn::Tensor;

namespace {

Tensor random_tensor(int r, int c, Rng& rng) {
  Tensor t(r, c);
  for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_GemmNT(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor(n, n, rng);
  const Tensor b = random_tensor(n, n, rng);
  Tensor c(n, n);
  for (auto _ : state) {
    std::fill(c.data.begin(), c.data.end(), 0.0);
    nn::detail::gemm_nt(a.data.data(), b.data.data(), c.data.data(), n, n, n);
    benchmark::DoNotOptimize(c.data.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(n) * n * n);
}

void BM_GruForward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  Rng rng(2);
  const auto params = nn::GruParams::init(200, 200, rng);
  const Tensor h = random_tensor(rows, 200, rng);
  const Tensor m = random_tensor(rows, 200, rng);
  for (auto _ : state) {
    auto out = gru_forward(params, h, m);
    benchmark::DoNotOptimize(out.data.data());
  }
}

void BM_MlpTrainStep(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Rng rng(3);
  auto params = nn::MlpParams::init(200, {256, 128, 256}, 2, 0.2, rng);
  const Tensor x = random_tensor(batch, 200, rng);
  std::vector<int> labels(static_cast<std::size_t>(batch));
  for (auto& l : labels) l = static_cast<int>(rng.index(2));
  for (auto _ : state) {
    nn::Tape t;
    auto vars = nn::mlp_leaves(t, params);
    auto out = nn::mlp_graph(t, vars, t.constant(x), 0.2, true, rng);
    auto loss = t.mean_all(t.softmax_ce(out.logits, labels));
    t.backward(loss);
    benchmark::DoNotOptimize(t.grad(vars.weights[0]).data.data());
  }
}

}  // namespace

BENCHMARK(BM_GemmNT)->Arg(64)->Arg(200)->Arg(256);
BENCHMARK(BM_GruForward)->Arg(8)->Arg(32);
BENCHMARK(BM_MlpTrainStep)->Arg(32)->Arg(128);
