#include <benchmark/benchmark.h>

#include "reveal/rng.hpp"
#include "reveal/sampling.hpp"
#include "reveal/stats.hpp"

using namespace reveal;

namespace {

std::vector<double> normal_sample(int n, double mean, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = rng.normal(mean, 1.0);
  return out;
}

void BM_BootstrapTest(benchmark::State& state) {
  const auto a = normal_sample(30, 0.0, 1);
  const auto b = normal_sample(30, 0.4, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bootstrap_test(a, b, static_cast<int>(state.range(0)), 7));
  }
}

void BM_Smote(benchmark::State& state) {
  Rng rng(5);
  std::vector<FeatureRecord> records;
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    FeatureRecord r;
    r.id = "r" + std::to_string(i);
    r.label = i < n / 10 ? 1 : 0;
    r.features.resize(32);
    for (auto& v : r.features) v = rng.normal(r.label, 1.0);
    records.push_back(std::move(r));
  }
  const int m = n - n / 10;
  for (auto _ : state) {
    auto out = smote(records, 5, m, 9);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ScottKnott(benchmark::State& state) {
  std::map<std::string, std::vector<double>> treatments{
      {"a", normal_sample(30, 0.0, 1)},
      {"b", normal_sample(30, 0.1, 2)},
      {"c", normal_sample(30, 2.0, 3)},
      {"d", normal_sample(30, 2.1, 4)},
  };
  for (auto _ : state) {
    auto ranked = scott_knott(treatments, 11);
    benchmark::DoNotOptimize(ranked.data());
  }
}

}  // namespace

BENCHMARK(BM_BootstrapTest)->Arg(1000)->Arg(10000);
BENCHMARK(BM_Smote)->Arg(500)->Arg(2000);
BENCHMARK(BM_ScottKnott);
