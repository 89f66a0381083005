#include <benchmark/benchmark.h>

#include "reveal/graph.hpp"

using namespace reveal;

namespace {

const char* kSnippet =
    "static int parse_header(struct ctx *c, const uint8_t *buf, size_t len) {\n"
    "  if (len < HDR_MIN || buf == NULL) return -EINVAL;\n"
    "  c->version = buf[0] >> 4; c->flags = buf[0] & 0x0f;\n"
    "  memcpy(c->tag, buf + 2, TAG_LEN);\n"
    "  return c->version == 2 ? 0 : -ENOTSUP;\n"
    "}\n";

void BM_Tokenize(benchmark::State& state) {
  for (auto _ : state) {
    auto tokens = tokenize(kSnippet);
    benchmark::DoNotOptimize(tokens.data());
  }
}

void BM_GraphFingerprint(benchmark::State& state) {
  CodeGraph g;
  g.id = "bench";
  g.label = 0;
  for (int i = 0; i < 40; ++i)
    g.vertices.push_back({i, "ExpressionStatement", kSnippet});
  for (int i = 0; i + 1 < 40; ++i) g.edges.push_back({i, i + 1, "AST"});
  for (auto _ : state) {
    auto fp = graph_fingerprint(g);
    benchmark::DoNotOptimize(fp.data());
  }
}

}  // namespace

BENCHMARK(BM_Tokenize);
BENCHMARK(BM_GraphFingerprint);
