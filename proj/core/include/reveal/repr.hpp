#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reveal/nn/adam.hpp"
#include "reveal/nn/layers.hpp"
#include "reveal/sampling.hpp"

namespace reveal {

enum class LossKind { kTriplet, kNll };

struct TripletConfig {
  double gamma = 0.5;
  double alpha = 0.5;
  double beta = 0.001;
  double lr = 0.001;
  double dropout = 0.2;
  int max_epochs = 100;
  int patience = 5;
  int batch = 128;
  std::vector<int> hidden = {256, 128, 256};
  bool hinge = false;  // max(0, .) instead of the literal |.|, off by default
  LossKind loss = LossKind::kTriplet;
  std::uint64_t seed = 1;
};

// 1 - |cos(v1, v2)|; antiparallel vectors have distance 0. Zero vectors
// are an error ("undefined cosine distance").
double cosine_distance(const std::vector<double>& v1, const std::vector<double>& v2);

// |D(h, h_same) - D(h, h_diff) + gamma|
double projection_loss(const std::vector<double>& h, const std::vector<double>& h_same,
                       const std::vector<double>& h_diff, double gamma);

// ||h|| + ||h_same|| + ||h_diff||
double regularization_loss(const std::vector<double>& h, const std::vector<double>& h_same,
                           const std::vector<double>& h_diff);

struct TripletBatch {
  std::vector<FeatureRecord> anchors;
  std::vector<FeatureRecord> sames;  // label(same_i) == label(anchor_i)
  std::vector<FeatureRecord> diffs;  // label(diff_i) != label(anchor_i)

  std::size_t size() const { return anchors.size(); }
  void validate() const;
};

// One batch: anchors in shuffled epoch order, same/diff companions drawn
// uniformly from their classes (same != anchor whenever the class has a
// second member). Errors on single-class input.
TripletBatch sample_triplets(const std::vector<FeatureRecord>& train, int batch_size,
                             std::uint64_t seed);

// Mean cross-entropy of the anchor predictions plus alpha * mean
// projection loss plus beta * mean regularization loss, evaluated in
// inference mode. With alpha = beta = 0 this is exactly the mean
// cross-entropy.
double triplet_loss(const TripletBatch& batch, const nn::MlpParams& params,
                    const TripletConfig& cfg);

// The full objective on a tape with MLP parameter leaves supplied in
// MlpParams::params() order (inference mode). The gradient-check harness
// drives this directly.
nn::Tape::Var triplet_loss_from_leaves(nn::Tape& t, const std::vector<nn::Tape::Var>& leaves,
                                       const TripletBatch& batch, const TripletConfig& cfg);

struct ReprTrainLog {
  struct Epoch {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_f1 = 0.0;
  };
  std::vector<Epoch> epochs;
  int best_epoch = -1;
  double best_valid_f1 = 0.0;
};

nn::MlpParams train_repr(const std::vector<FeatureRecord>& train,
                         const std::vector<FeatureRecord>& valid, const TripletConfig& cfg,
                         ReprTrainLog* log = nullptr);

struct Prediction {
  std::string id;
  double prob = 0.0;  // probability of class 1
  int pred = 0;
  int label = 0;
};

std::vector<Prediction> predict(const std::vector<FeatureRecord>& records,
                                const nn::MlpParams& params);

// Latent representations h(x) for every record, inference mode.
std::vector<std::vector<double>> latent_of(const std::vector<FeatureRecord>& records,
                                           const nn::MlpParams& params);

void save_repr(const nn::MlpParams& p, const nn::AdamState& opt, const std::string& path,
               const std::string& config_hash, std::uint64_t seed);
nn::MlpParams load_repr(const std::string& path);

void save_predictions(const std::vector<Prediction>& preds, const std::string& path);

}  // namespace reveal
