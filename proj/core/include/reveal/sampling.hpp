#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reveal {

// One example flowing through rebalancing and the representation learner.
struct FeatureRecord {
  std::string id;
  std::vector<double> features;
  int label = 0;
  std::string project;
  bool synthetic = false;
};

// SMOTE: randomly removes majority records down to m, then synthesizes
// minority records up to m by interpolating between an original minority
// record and one of its k nearest original minority neighbors (Euclidean,
// lambda uniform in (0,1)). Original records keep their input order and
// ids; synthetics are appended with suffixed ids. Deterministic per seed.
//
// Errors: single-class input; a singleton minority that needs synthesis;
// m below the minority count (the balanced postcondition would be
// unsatisfiable).
std::vector<FeatureRecord> smote(const std::vector<FeatureRecord>& records, int k, int m,
                                 std::uint64_t seed);

// m = min(majority count, ceil(factor * minority count)); factor 1 is a
// full undersample, a large factor a full oversample.
std::vector<FeatureRecord> rebalance_ratio(const std::vector<FeatureRecord>& records,
                                           double oversample_factor, std::uint64_t seed);

// JSONL: {"id","label","project","features":[...],"synthetic":bool}
std::vector<FeatureRecord> load_records(const std::string& path);
void save_records(const std::vector<FeatureRecord>& records, const std::string& path);

}  // namespace reveal
