#include "reveal/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "reveal/rng.hpp"

namespace reveal {

using nlohmann::json;

namespace {

inline double sigmoid_s(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Cumulative unigram^0.75 table for negative sampling.
struct NegativeSampler {
  std::vector<double> cdf;

  explicit NegativeSampler(const std::vector<std::int64_t>& counts) {
    cdf.resize(counts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      acc += std::pow(static_cast<double>(counts[i]), 0.75);
      cdf[i] = acc;
    }
  }

  int draw(Rng& rng) const {
    const double u = rng.uniform() * cdf.back();
    return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  }
};

}  // namespace

TokenEmbedding train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                              const SkipgramConfig& cfg, SkipgramLog* log) {
  if (corpus.empty()) throw std::invalid_argument("skip-gram: empty corpus");
  if (cfg.window < 1 || cfg.dim < 1 || cfg.epochs < 1)
    throw std::invalid_argument("skip-gram: window, dim, and epochs must be positive");

  TokenEmbedding emb;
  emb.dim = cfg.dim;
  emb.window = cfg.window;
  emb.vocab.push_back(TokenEmbedding::kUnk);
  emb.index[TokenEmbedding::kUnk] = 0;

  std::vector<std::vector<int>> sentences;
  std::vector<std::int64_t> counts{0};  // UNK never occurs in training
  std::int64_t positions = 0;
  for (const auto& sent : corpus) {
    std::vector<int> ids;
    ids.reserve(sent.size());
    for (const auto& tok : sent) {
      auto [it, inserted] = emb.index.emplace(tok, static_cast<int>(emb.vocab.size()));
      if (inserted) {
        emb.vocab.push_back(tok);
        counts.push_back(0);
      }
      counts[it->second] += 1;
      ids.push_back(it->second);
    }
    positions += static_cast<std::int64_t>(ids.size());
    sentences.push_back(std::move(ids));
  }
  if (positions == 0) throw std::invalid_argument("skip-gram: corpus has no tokens");

  const int vocab_size = static_cast<int>(emb.vocab.size());
  Rng rng(cfg.seed);
  std::vector<double> wi(static_cast<std::size_t>(vocab_size) * cfg.dim);
  std::vector<double> wo(static_cast<std::size_t>(vocab_size) * cfg.dim, 0.0);
  for (double& v : wi) v = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim);

  NegativeSampler sampler(counts);
  const double total_steps = static_cast<double>(positions) * cfg.epochs;
  const double min_lr = cfg.lr * 1e-4;
  std::int64_t step = 0;
  std::vector<double> hidden_err(cfg.dim);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::int64_t loss_n = 0;
    for (const auto& sent : sentences) {
      const int n = static_cast<int>(sent.size());
      for (int i = 0; i < n; ++i) {
        const double lr =
            std::max(min_lr, cfg.lr * (1.0 - static_cast<double>(step) / total_steps));
        ++step;
        const int center = sent[i];
        double* vin = wi.data() + static_cast<std::size_t>(center) * cfg.dim;
        for (int off = -cfg.window; off <= cfg.window; ++off) {
          if (off == 0) continue;
          const int j = i + off;
          if (j < 0 || j >= n) continue;
          const int context = sent[j];
          std::fill(hidden_err.begin(), hidden_err.end(), 0.0);
          for (int neg = 0; neg <= cfg.negatives; ++neg) {
            int target;
            double label;
            if (neg == 0) {
              target = context;
              label = 1.0;
            } else {
              target = sampler.draw(rng);
              if (target == context) continue;
              label = 0.0;
            }
            double* vout = wo.data() + static_cast<std::size_t>(target) * cfg.dim;
            double dot = 0.0;
            for (int d = 0; d < cfg.dim; ++d) dot += vin[d] * vout[d];
            const double pred = sigmoid_s(dot);
            loss_sum += label > 0.5 ? -std::log(std::max(pred, 1e-12))
                                    : -std::log(std::max(1.0 - pred, 1e-12));
            const double g = (label - pred) * lr;
            for (int d = 0; d < cfg.dim; ++d) {
              hidden_err[d] += g * vout[d];
              vout[d] += g * vin[d];
            }
          }
          ++loss_n;
          for (int d = 0; d < cfg.dim; ++d) vin[d] += hidden_err[d];
        }
      }
    }
    if (log) log->epoch_mean_loss.push_back(loss_n ? loss_sum / loss_n : 0.0);
  }

  emb.vectors.resize(vocab_size);
  for (int w = 0; w < vocab_size; ++w)
    emb.vectors[w].assign(wi.begin() + static_cast<std::size_t>(w) * cfg.dim,
                          wi.begin() + static_cast<std::size_t>(w + 1) * cfg.dim);
  return emb;
}

TokenEmbedding train_skipgram(const std::vector<std::vector<std::string>>& corpus, int window,
                              int dim, int epochs, std::uint64_t seed) {
  SkipgramConfig cfg;
  cfg.window = window;
  cfg.dim = dim;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return train_skipgram(corpus, cfg);
}

std::vector<std::vector<std::string>> corpus_from_graphs(const std::vector<CodeGraph>& graphs) {
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(graphs.size());
  for (const auto& g : graphs) {
    std::vector<const Vertex*> by_id(g.vertices.size(), nullptr);
    for (const auto& v : g.vertices) by_id[static_cast<std::size_t>(v.id)] = &v;
    std::vector<std::string> sentence;
    for (const Vertex* v : by_id) {
      auto toks = tokenize(v->code);
      sentence.insert(sentence.end(), std::make_move_iterator(toks.begin()),
                      std::make_move_iterator(toks.end()));
    }
    corpus.push_back(std::move(sentence));
  }
  return corpus;
}

VertexFeature featurize_vertex(const Vertex& v, const TokenEmbedding& emb,
                               const TypeVocabulary& types) {
  const int type_idx = types.index_of(v.vtype);
  if (type_idx < 0)
    throw std::invalid_argument("featurize_vertex: unknown vertex type \"" + v.vtype + "\"");
  VertexFeature f;
  f.values.assign(types.size() + static_cast<std::size_t>(emb.dim), 0.0);
  f.values[static_cast<std::size_t>(type_idx)] = 1.0;
  const auto tokens = tokenize(v.code);
  if (tokens.empty()) return f;
  double* block = f.values.data() + types.size();
  for (const auto& tok : tokens) {
    const auto& vec = emb.vector_of(tok);
    for (int d = 0; d < emb.dim; ++d) block[d] += vec[d];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (int d = 0; d < emb.dim; ++d) block[d] *= inv;
  return f;
}

void save_embedding(const TokenEmbedding& emb, const std::string& path,
                    const std::string& config_hash, std::uint64_t seed) {
  json j{{"vocab", emb.vocab},
         {"dim", emb.dim},
         {"window", emb.window},
         {"vectors", emb.vectors},
         {"config_hash", config_hash},
         {"seed", seed}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  out << j.dump() << '\n';
}

TokenEmbedding load_embedding(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed JSON: " + e.what());
  }
  TokenEmbedding emb;
  emb.dim = j.at("dim").get<int>();
  emb.window = j.at("window").get<int>();
  emb.vocab = j.at("vocab").get<std::vector<std::string>>();
  emb.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
  if (emb.vocab.size() != emb.vectors.size())
    throw std::runtime_error(path + ": vocab/vector count mismatch");
  for (std::size_t i = 0; i < emb.vocab.size(); ++i) emb.index[emb.vocab[i]] = static_cast<int>(i);
  return emb;
}

}  // namespace reveal
