#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "reveal/graph.hpp"

namespace reveal {

// Token vectors learned by skip-gram with negative sampling. Index 0 is
// the reserved UNK row used for out-of-vocabulary tokens.
struct TokenEmbedding {
  static constexpr const char* kUnk = "<unk>";

  std::vector<std::string> vocab;                  // index -> token
  std::unordered_map<std::string, int> index;      // token -> index
  std::vector<std::vector<double>> vectors;        // [vocab size][dim]
  int dim = 0;
  int window = 0;

  const std::vector<double>& vector_of(const std::string& token) const {
    auto it = index.find(token);
    return vectors[it == index.end() ? 0 : it->second];
  }
};

struct SkipgramConfig {
  int window = 10;
  int dim = 100;
  int epochs = 5;
  int negatives = 5;
  double lr = 0.025;  // linearly decayed
  std::uint64_t seed = 1;
};

struct SkipgramLog {
  std::vector<double> epoch_mean_loss;
};

TokenEmbedding train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                              const SkipgramConfig& cfg, SkipgramLog* log = nullptr);

TokenEmbedding train_skipgram(const std::vector<std::vector<std::string>>& corpus, int window,
                              int dim, int epochs, std::uint64_t seed);

// One sentence per graph: the vertices' token streams in id order.
std::vector<std::vector<std::string>> corpus_from_graphs(const std::vector<CodeGraph>& graphs);

// [one-hot(vertex type) || mean of token vectors]. Empty code leaves the
// token block at zero; unseen tokens use the UNK row.
struct VertexFeature {
  std::vector<double> values;
};

VertexFeature featurize_vertex(const Vertex& v, const TokenEmbedding& emb,
                               const TypeVocabulary& types);

void save_embedding(const TokenEmbedding& emb, const std::string& path,
                    const std::string& config_hash, std::uint64_t seed);
TokenEmbedding load_embedding(const std::string& path);

}  // namespace reveal
