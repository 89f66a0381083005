#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reveal/config.hpp"
#include "reveal/stats.hpp"

namespace reveal {

struct ArmFlags {
  bool use_ggnn = true;
  bool use_smote = true;
  LossKind loss = LossKind::kTriplet;
};

// Resolves an arm name (full | nll | no-smote | no-ggnn) against the
// configured base flags.
ArmFlags resolve_arm(const RunConfig& cfg, const std::string& arm);

struct ArmRun {
  int run = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;  // "<stage>: message" when failed
  RunMetrics metrics;
};

struct ArmResult {
  std::string name;
  ArmFlags flags;
  std::vector<ArmRun> runs;
  std::map<std::string, MetricDistribution> aggregates;  // over successful runs
};

struct PairwiseComparison {
  std::string metric;
  std::string a, b;
  double p_value = 1.0;
  double a12 = 0.5;
  bool distinct = false;
};

struct ExperimentReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  int n_runs = 0;
  std::vector<ArmResult> arms;
  std::vector<PairwiseComparison> comparisons;  // f1, every arm pair
  std::vector<RankedTreatment> ranking;         // Scott-Knott over f1
};

// Runs every (arm, run) job: split, optional GGNN pretraining and
// extraction, optional SMOTE, representation training, test metrics.
// A failed stage marks that run and the remaining runs continue.
// REVEALKIT_THREADS caps how many jobs run in parallel; results merge in
// run order either way.
ExperimentReport run_experiment(const RunConfig& cfg);

std::string report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);

// Vocabularies named by the config, or the built-in defaults.
std::pair<TypeVocabulary, TypeVocabulary> vocabularies_of(const RunConfig& cfg);

// SMOTE with the configured k and target count (smote.factor 0 balances
// at the majority count).
std::vector<FeatureRecord> smote_with_config(const RunConfig& cfg,
                                             const std::vector<FeatureRecord>& records,
                                             std::uint64_t seed);

// Sidecar metadata ("<path>.meta.json") stamping artifacts with the
// config hash and seed that produced them.
void write_meta(const std::string& artifact_path, const std::string& config_hash,
                std::uint64_t seed);
// Returns the stamped hash, or an empty string when no sidecar exists.
std::string read_meta_hash(const std::string& artifact_path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace reveal
