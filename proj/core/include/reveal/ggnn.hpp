#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reveal/embedding.hpp"
#include "reveal/graph.hpp"
#include "reveal/nn/adam.hpp"
#include "reveal/nn/layers.hpp"
#include "reveal/sampling.hpp"

namespace reveal {

struct GgnnConfig {
  int hidden = 200;
  int steps = 8;
  double lr = 1e-4;
  int max_epochs = 500;
  int patience = 50;       // epochs without a validation-F1 improvement
  int batch = 32;
  bool shared_transform = false;  // one message transform for all edge types
  bool reverse_edges = false;     // also send messages against edge direction
  std::uint64_t seed = 1;
};

// Message transforms per edge type, a GRU shared across propagation steps,
// and the classification head used for pretraining. Initial vertex states
// are the 169-dim features zero-padded to the hidden width.
struct GgnnParams {
  std::vector<std::string> edge_types;
  std::vector<nn::Tensor> edge_w;  // [hidden x hidden] per transform
  std::vector<nn::Tensor> edge_b;  // [1 x hidden]
  nn::GruParams gru;               // input dim == hidden dim
  nn::Tensor head_w;               // [2 x hidden]
  nn::Tensor head_b;               // [1 x 2]
  int input_dim = 0;
  int steps = 8;
  bool shared_transform = false;
  bool reverse_edges = false;

  static GgnnParams init(const GgnnConfig& cfg, const std::vector<std::string>& edge_types,
                         int input_dim, Rng& rng);
  int hidden() const { return gru.hidden(); }
  int transform_index(int edge_type_index) const {
    return shared_transform ? 0 : edge_type_index;
  }
  nn::ParamRefs params();
};

// Features zero-padded to the hidden width, one row per vertex id.
nn::Tensor initial_states(const std::vector<VertexFeature>& feats, int hidden);

// Features for g.vertices in vertex-id order.
std::vector<VertexFeature> featurize_graph(const CodeGraph& g, const TokenEmbedding& emb,
                                           const TypeVocabulary& vertex_types);

// Synchronous message passing: every vertex receives the sum of
// W_etype * x_u + b_etype over its incoming edges (u,v), then updates its
// state through the shared GRU. steps = 0 returns the padded inputs.
nn::Tensor propagate(const CodeGraph& g, const std::vector<VertexFeature>& feats,
                     const GgnnParams& p, int steps);

// Element-wise sum of the final vertex states; errors on an empty graph.
std::vector<double> graph_embed(const nn::Tensor& states);

struct EpochStat {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_f1 = 0.0;
};

struct GgnnTrainLog {
  std::vector<EpochStat> epochs;
  int best_epoch = -1;
  double best_valid_f1 = 0.0;
};

// Pretraining loss (mean cross-entropy of the softmax head) on a tape,
// with parameter leaves supplied in GgnnParams::params() order. The
// gradient-check harness drives this directly.
nn::Tape::Var ggnn_loss_from_leaves(nn::Tape& t, const std::vector<nn::Tape::Var>& leaves,
                                    const GgnnParams& shape, const std::vector<CodeGraph>& graphs,
                                    const TokenEmbedding& emb, const TypeVocabulary& vertex_types,
                                    int steps);

// Supervised pretraining of the GGNN under a softmax head with Adam.
// Early-stops after cfg.patience epochs without a validation-F1
// improvement and returns the best-validation parameters.
GgnnParams pretrain_ggnn(const std::vector<CodeGraph>& train, const std::vector<CodeGraph>& valid,
                         const TokenEmbedding& emb, const TypeVocabulary& vertex_types,
                         const TypeVocabulary& edge_types, const GgnnConfig& cfg,
                         GgnnTrainLog* log = nullptr);

// Inference-mode graph embeddings, one FeatureRecord per graph in order.
std::vector<FeatureRecord> extract_features(const std::vector<CodeGraph>& graphs,
                                            const TokenEmbedding& emb,
                                            const TypeVocabulary& vertex_types,
                                            const TypeVocabulary& edge_types,
                                            const GgnnParams& params);

// Ablation path without message passing: sums raw vertex features.
std::vector<FeatureRecord> extract_features_raw(const std::vector<CodeGraph>& graphs,
                                                const TokenEmbedding& emb,
                                                const TypeVocabulary& vertex_types);

void save_ggnn(const GgnnParams& p, const nn::AdamState& opt, const std::string& path,
               const std::string& config_hash, std::uint64_t seed, double lr);
GgnnParams load_ggnn(const std::string& path);

}  // namespace reveal
