#include "reveal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "reveal/rng.hpp"

namespace reveal {

using nlohmann::json;

namespace {

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::vector<FeatureRecord> smote(const std::vector<FeatureRecord>& records, int k, int m,
                                 std::uint64_t seed) {
  if (k < 1 || m < 1) throw std::invalid_argument("smote: k and m must be positive");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].features.size() != records[0].features.size())
      throw std::invalid_argument("smote: inconsistent feature lengths");
    (records[i].label == 1 ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) throw std::invalid_argument("smote: single-class input");

  // the vulnerable class wins ties, matching its usual minority role
  const bool pos_minor = pos.size() <= neg.size();
  std::vector<std::size_t>& minority = pos_minor ? pos : neg;
  std::vector<std::size_t>& majority = pos_minor ? neg : pos;
  const std::size_t target = static_cast<std::size_t>(m);
  if (minority.size() > target)
    throw std::invalid_argument("smote: m is below the minority count; nothing to balance to");
  if (minority.size() == 1 && target > 1)
    throw std::invalid_argument("smote: cannot interpolate a singleton class");

  Rng rng(seed);

  // undersample: remove uniformly random majority records
  std::vector<char> removed(records.size(), 0);
  std::vector<std::size_t> pool = majority;
  while (pool.size() > target) {
    const std::size_t at = rng.index(pool.size());
    removed[pool[at]] = 1;
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
  }

  // oversample: neighbors are always original minority records
  std::vector<std::vector<std::size_t>> neighbors;
  if (minority.size() < target) {
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), minority.size() - 1);
    neighbors.resize(minority.size());
    for (std::size_t a = 0; a < minority.size(); ++a) {
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(minority.size() - 1);
      for (std::size_t b = 0; b < minority.size(); ++b) {
        if (b == a) continue;
        dist.emplace_back(sq_distance(records[minority[a]].features, records[minority[b]].features),
                          b);
      }
      std::sort(dist.begin(), dist.end());
      for (std::size_t i = 0; i < kk; ++i) neighbors[a].push_back(dist[i].second);
    }
  }

  std::vector<FeatureRecord> synthetic;
  std::size_t minority_count = minority.size();
  std::size_t synth_serial = 0;
  while (minority_count < target) {
    const std::size_t a = rng.index(minority.size());
    const FeatureRecord& x = records[minority[a]];
    for (std::size_t b : neighbors[a]) {
      if (minority_count >= target) break;
      const FeatureRecord& n = records[minority[b]];
      const double lambda = rng.uniform_open();
      FeatureRecord s;
      s.id = x.id + "#syn" + std::to_string(synth_serial++);
      s.label = x.label;
      s.project = x.project;
      s.synthetic = true;
      s.features.resize(x.features.size());
      for (std::size_t d = 0; d < x.features.size(); ++d)
        s.features[d] = x.features[d] + lambda * (n.features[d] - x.features[d]);
      synthetic.push_back(std::move(s));
      ++minority_count;
    }
  }

  std::vector<FeatureRecord> out;
  out.reserve(records.size() - (majority.size() - std::min(majority.size(), target)) +
              synthetic.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!removed[i]) out.push_back(records[i]);
  for (auto& s : synthetic) out.push_back(std::move(s));
  return out;
}

std::vector<FeatureRecord> rebalance_ratio(const std::vector<FeatureRecord>& records,
                                           double oversample_factor, std::uint64_t seed) {
  if (oversample_factor < 1.0)
    throw std::invalid_argument("rebalance_ratio: factor must be at least 1");
  std::size_t pos = 0, neg = 0;
  for (const auto& r : records) (r.label == 1 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw std::invalid_argument("rebalance_ratio: single-class input");
  const std::size_t minority = std::min(pos, neg);
  const std::size_t majority = std::max(pos, neg);
  const auto wanted = static_cast<std::size_t>(
      std::ceil(oversample_factor * static_cast<double>(minority)));
  const int m = static_cast<int>(std::min(majority, wanted));
  return smote(records, 5, m, seed);
}

std::vector<FeatureRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  std::vector<FeatureRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      FeatureRecord r;
      r.id = j.at("id").get<std::string>();
      r.label = j.at("label").get<int>();
      r.project = j.value("project", std::string{});
      r.features = j.at("features").get<std::vector<double>>();
      r.synthetic = j.value("synthetic", false);
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void save_records(const std::vector<FeatureRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write feature file: " + path);
  for (const auto& r : records) {
    json j{{"id", r.id},
           {"label", r.label},
           {"project", r.project},
           {"features", r.features},
           {"synthetic", r.synthetic}};
    out << j.dump() << '\n';
  }
}

}  // namespace reveal
