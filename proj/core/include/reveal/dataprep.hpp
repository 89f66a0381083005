#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "reveal/rng.hpp"
#include "reveal/sampling.hpp"

namespace reveal {

// A security patch: function bodies before and after, plus the names the
// patch actually changed.
struct PatchRecord {
  std::string patch_id;
  std::string project;
  std::vector<std::pair<std::string, std::string>> before;  // (name, body)
  std::vector<std::pair<std::string, std::string>> after;
  std::vector<std::string> changed;
};

struct LabeledFunction {
  std::string id;
  std::string body;
  int label = 0;
  std::string origin;  // before-changed | after-changed | unchanged
  std::string patch_id;
};

// The labeling scheme: pre-patch versions of changed functions are
// vulnerable; their post-patch versions and every untouched function are
// clean. A changed name present on neither side is an error.
std::vector<LabeledFunction> label_patch(const PatchRecord& p);

// Keeps only single-function patches.
std::vector<PatchRecord> tangled_filter(const std::vector<PatchRecord>& patches);

// Heuristic function-level scanner for C-like text: a function starts
// where an identifier is followed by a parenthesized parameter list and a
// '{' at top level; the body runs to the matching '}'. Comments, string
// and character literals, and preprocessor lines never affect brace
// counting. Unbalanced braces raise an error naming the line.
std::vector<std::pair<std::string, std::string>> extract_functions(const std::string& source);

template <typename T>
struct DedupResult {
  std::vector<T> unique;
  double duplicate_fraction = 0.0;
  std::size_t total = 0;
};

// Keeps the first occurrence per fingerprint.
template <typename T, typename FingerprintFn>
DedupResult<T> dedup(const std::vector<T>& items, FingerprintFn&& fingerprint) {
  DedupResult<T> r;
  r.total = items.size();
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(fingerprint(item)).second) r.unique.push_back(item);
  }
  r.duplicate_fraction =
      items.empty() ? 0.0
                    : 1.0 - static_cast<double>(r.unique.size()) / static_cast<double>(items.size());
  return r;
}

// Randomly drops vulnerable records until their fraction is within one
// record of the target. The target must not exceed the current fraction.
std::vector<FeatureRecord> inject_imbalance(const std::vector<FeatureRecord>& test,
                                            double vulnerable_fraction, std::uint64_t seed);

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

// Disjoint, union-complete, label-stratified partition with largest-
// remainder rounding per class. Deterministic per seed.
template <typename T, typename LabelFn>
std::array<std::vector<T>, 3> stratified_split(const std::vector<T>& records,
                                               const SplitFractions& f, std::uint64_t seed,
                                               LabelFn&& label_of, bool stratified = true) {
  const double sum = f.train + f.valid + f.test;
  if (f.train <= 0.0 || f.valid <= 0.0 || f.test <= 0.0 || std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must be positive and sum to 1");

  std::vector<std::vector<std::size_t>> classes;
  if (stratified) {
    classes.resize(2);
    for (std::size_t i = 0; i < records.size(); ++i)
      classes[label_of(records[i]) == 1 ? 1 : 0].push_back(i);
  } else {
    classes.resize(1);
    for (std::size_t i = 0; i < records.size(); ++i) classes[0].push_back(i);
  }

  Rng rng(seed);
  std::array<std::vector<T>, 3> out;
  for (auto& members : classes) {
    if (members.empty()) continue;
    rng.shuffle(members);
    const double fr[3] = {f.train, f.valid, f.test};
    std::size_t take[3];
    double rem[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double ideal = fr[s] * static_cast<double>(members.size());
      take[s] = static_cast<std::size_t>(ideal);
      rem[s] = ideal - static_cast<double>(take[s]);
      assigned += take[s];
    }
    while (assigned < members.size()) {
      int best = 0;
      for (int s = 1; s < 3; ++s)
        if (rem[s] > rem[best]) best = s;
      take[best] += 1;
      rem[best] = -1.0;
      ++assigned;
    }
    std::size_t at = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t i = 0; i < take[s]; ++i) out[s].push_back(records[members[at++]]);
  }
  return out;
}

std::array<std::vector<FeatureRecord>, 3> split_records(const std::vector<FeatureRecord>& records,
                                                        const SplitFractions& f,
                                                        std::uint64_t seed,
                                                        bool stratified = true);

// JSONL: {"patch_id","project","before":[{"name","body"},...],
//         "after":[...],"changed":["ham"]}
std::vector<PatchRecord> load_patches(const std::string& path);
void save_patches(const std::vector<PatchRecord>& patches, const std::string& path);

// JSONL: {"id","body","label","origin","patch_id"}
std::vector<LabeledFunction> load_labeled(const std::string& path);
void save_labeled(const std::vector<LabeledFunction>& functions, const std::string& path);

}  // namespace reveal
