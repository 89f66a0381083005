#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reveal/dataprep.hpp"
#include "reveal/embedding.hpp"
#include "reveal/ggnn.hpp"
#include "reveal/repr.hpp"

namespace reveal {

// Everything an experiment needs. Defaults carry "paper-table" provenance
// wherever the upstream hyper-parameter table pins a value.
struct RunConfig {
  // inputs and outputs (never part of the config hash)
  std::string graphs_path;
  std::string features_path;   // skips Phase-I: records go straight to SMOTE/repr
  std::string corpus_path;     // optional; graphs' code when empty
  std::string vocab_path;      // optional; built-in vocabularies when empty
  std::string embedding_path;  // optional; trained once per experiment when empty
  std::string out_dir = "out";

  SkipgramConfig embed;  // window 10, dim 100
  GgnnConfig ggnn;       // hidden 200, 8 steps, lr 1e-4, 500 epochs, patience 50
  TripletConfig repr;    // gamma/alpha/beta 0.5/0.5/0.001, lr 1e-3, dropout 0.2

  int smote_k = 5;
  double smote_factor = 0.0;  // 0 = balance at the majority count

  SplitFractions split;  // 0.8 / 0.1 / 0.1
  bool stratified = true;

  double test_vulnerable_fraction = 0.0;  // 0 = leave the test split alone

  int n_runs = 30;
  std::uint64_t seed = 1337;

  bool use_ggnn = true;
  bool use_smote = true;
  LossKind loss = LossKind::kTriplet;

  // Ablation arms evaluated side by side: full | nll | no-smote | no-ggnn
  std::vector<std::string> arms = {"full"};
};

RunConfig load_config(const std::string& path);

// Applies one `key = value` pair; unknown keys are an error.
void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical key-value rendering. With provenance, each line carries a
// "paper-table" or "artifact-default" marker.
std::string print_config(const RunConfig& cfg, bool with_provenance);

// Stable hash over the canonical rendering, paths excluded.
std::string config_hash(const RunConfig& cfg);

}  // namespace reveal
