#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "reveal/embedding.hpp"
#include "support.hpp"

using namespace reveal;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::vector<std::string>> toy_corpus() {
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 150; ++i) {
    corpus.push_back({"a", "b", "c"});
    corpus.push_back({"z", "q", "w"});
  }
  return corpus;
}

}  // namespace

TEST_CASE("trained vectors have the requested dimension") {
  const auto emb = train_skipgram(toy_corpus(), 2, 100, 1, 7);
  CHECK(emb.dim == 100);
  for (const auto& v : emb.vectors) CHECK(v.size() == 100);
  CHECK(emb.vocab.front() == std::string(TokenEmbedding::kUnk));
}

TEST_CASE("co-occurring tokens end up closer than never-co-occurring ones") {
  SkipgramConfig cfg;
  cfg.window = 2;
  cfg.dim = 16;
  cfg.epochs = 10;
  cfg.seed = 42;
  const auto emb = train_skipgram(toy_corpus(), cfg);
  const double sim_ab = cosine(emb.vector_of("a"), emb.vector_of("b"));
  const double sim_az = cosine(emb.vector_of("a"), emb.vector_of("z"));
  CHECK(sim_ab > sim_az);
}

TEST_CASE("training is bitwise deterministic per seed") {
  SkipgramConfig cfg;
  cfg.window = 3;
  cfg.dim = 8;
  cfg.epochs = 2;
  cfg.seed = 1234;
  const auto a = train_skipgram(toy_corpus(), cfg);
  const auto b = train_skipgram(toy_corpus(), cfg);
  REQUIRE(a.vectors.size() == b.vectors.size());
  for (std::size_t i = 0; i < a.vectors.size(); ++i) CHECK(a.vectors[i] == b.vectors[i]);
}

TEST_CASE("empty corpus is an error") {
  CHECK_THROWS_AS(train_skipgram({}, 2, 8, 1, 1), std::invalid_argument);
}

TEST_CASE("epoch losses trend downward on the fixture corpus") {
  SkipgramConfig cfg;
  cfg.window = 2;
  cfg.dim = 16;
  cfg.epochs = 8;
  cfg.seed = 5;
  SkipgramLog log;
  train_skipgram(toy_corpus(), cfg, &log);
  REQUIRE(log.epoch_mean_loss.size() == 8);
  CHECK(log.epoch_mean_loss.back() < log.epoch_mean_loss.front());
}

TEST_CASE("featurize_vertex lays out one-hot type then mean token vector") {
  SkipgramConfig cfg;
  cfg.window = 2;
  cfg.dim = 8;
  cfg.epochs = 1;
  cfg.seed = 3;
  const auto emb = train_skipgram({{"alpha", "beta"}}, cfg);
  TypeVocabulary types{{"CallStatement", "Identifier"}};

  SUBCASE("empty code leaves the token block at zero") {
    const auto f = featurize_vertex({0, "Identifier", ""}, emb, types);
    REQUIRE(f.values.size() == 2 + 8);
    CHECK(f.values[0] == 0.0);
    CHECK(f.values[1] == 1.0);
    for (std::size_t i = 2; i < f.values.size(); ++i) CHECK(f.values[i] == 0.0);
  }

  SUBCASE("a single token copies that token's vector") {
    const auto f = featurize_vertex({0, "CallStatement", "alpha"}, emb, types);
    const auto& v = emb.vector_of("alpha");
    for (int d = 0; d < 8; ++d) CHECK(f.values[2 + d] == doctest::Approx(v[d]));
  }

  SUBCASE("the one-hot block has exactly one set entry") {
    const auto f = featurize_vertex({0, "CallStatement", "alpha beta"}, emb, types);
    CHECK(f.values[0] == 1.0);
    CHECK(f.values[1] == 0.0);
  }

  SUBCASE("unseen tokens fall back to the UNK row") {
    const auto f = featurize_vertex({0, "Identifier", "nonesuch"}, emb, types);
    const auto& unk = emb.vectors[0];
    for (int d = 0; d < 8; ++d) CHECK(f.values[2 + d] == doctest::Approx(unk[d]));
  }

  SUBCASE("unknown vertex types are an error") {
    CHECK_THROWS_AS(featurize_vertex({0, "Mystery", "alpha"}, emb, types), std::invalid_argument);
  }
}

TEST_CASE("default configuration yields 169-dim vertex features") {
  SkipgramConfig cfg;
  cfg.window = 10;
  cfg.dim = 100;
  cfg.epochs = 1;
  cfg.seed = 9;
  const auto emb = train_skipgram({{"free", "(", "data", ")"}}, cfg);
  const auto f = featurize_vertex({0, "CallStatement", "free(data)"}, emb, default_vertex_types());
  CHECK(f.values.size() == 169);
}

TEST_CASE("embedding checkpoints round-trip") {
  testutil::TempDir tmp("emb");
  SkipgramConfig cfg;
  cfg.window = 2;
  cfg.dim = 8;
  cfg.epochs = 1;
  cfg.seed = 3;
  const auto emb = train_skipgram(toy_corpus(), cfg);
  save_embedding(emb, tmp.path("emb.json"), "hash", 3);
  const auto back = load_embedding(tmp.path("emb.json"));
  CHECK(back.dim == emb.dim);
  CHECK(back.window == emb.window);
  CHECK(back.vocab == emb.vocab);
  CHECK(back.vectors == emb.vectors);
  CHECK(back.vector_of("a") == emb.vector_of("a"));
}
