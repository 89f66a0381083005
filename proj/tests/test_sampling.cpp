#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "reveal/rng.hpp"
#include "reveal/sampling.hpp"
#include "support.hpp"

using namespace reveal;
using testutil::record;

namespace {

// Residual of the best convex-combination fit of s between any pair of
// originals; 0 when s lies on an open segment between two of them.
double convex_residual(const FeatureRecord& s, const std::vector<FeatureRecord>& originals) {
  double best = 1e30;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    for (std::size_t j = 0; j < originals.size(); ++j) {
      if (i == j) continue;
      const auto& x = originals[i].features;
      const auto& n = originals[j].features;
      // solve s = x + lambda (n - x) from the largest-gap coordinate
      double lambda = -1.0, span = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) {
        const double gap = std::fabs(n[d] - x[d]);
        if (gap > span) {
          span = gap;
          lambda = (s.features[d] - x[d]) / (n[d] - x[d]);
        }
      }
      if (span == 0.0 || lambda <= 0.0 || lambda >= 1.0) continue;
      double residual = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d)
        residual = std::max(residual,
                            std::fabs(x[d] + lambda * (n[d] - x[d]) - s.features[d]));
      best = std::min(best, residual);
    }
  }
  return best;
}

std::vector<FeatureRecord> random_dataset(Rng& rng, std::size_t n_min, std::size_t n_maj, int dim) {
  std::vector<FeatureRecord> data;
  for (std::size_t i = 0; i < n_min; ++i) {
    std::vector<double> f(dim);
    for (auto& v : f) v = rng.normal(1.0, 0.5);
    data.push_back(record("min" + std::to_string(i), 1, std::move(f)));
  }
  for (std::size_t i = 0; i < n_maj; ++i) {
    std::vector<double> f(dim);
    for (auto& v : f) v = rng.normal(-1.0, 0.5);
    data.push_back(record("maj" + std::to_string(i), 0, std::move(f)));
  }
  rng.shuffle(data);
  return data;
}

}  // namespace

TEST_CASE("already balanced input comes back unchanged") {
  std::vector<FeatureRecord> data{record("a", 1, {0.0}), record("b", 1, {1.0}),
                                  record("c", 0, {2.0}), record("d", 0, {3.0})};
  const auto out = smote(data, 1, 2, 99);
  REQUIRE(out.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out[i].id == data[i].id);
    CHECK(out[i].features == data[i].features);
    CHECK_FALSE(out[i].synthetic);
  }
}

TEST_CASE("two-point minority synthesizes on the open segment") {
  std::vector<FeatureRecord> data{record("m0", 1, {0.0, 0.0}), record("m1", 1, {1.0, 1.0}),
                                  record("c0", 0, {5.0, 5.0}), record("c1", 0, {6.0, 5.0}),
                                  record("c2", 0, {5.0, 6.0}), record("c3", 0, {6.0, 6.0})};
  const auto out = smote(data, 1, 4, 7);
  std::size_t minority = 0, synth = 0;
  for (const auto& r : out) {
    if (r.label != 1) continue;
    ++minority;
    if (!r.synthetic) continue;
    ++synth;
    // on the open segment between (0,0) and (1,1): equal coords in (0,1)
    CHECK(r.features[0] == doctest::Approx(r.features[1]).epsilon(1e-12));
    CHECK(r.features[0] > 0.0);
    CHECK(r.features[0] < 1.0);
  }
  CHECK(minority == 4);
  CHECK(synth == 2);
}

TEST_CASE("pure undersampling removes exactly the surplus") {
  std::vector<FeatureRecord> data;
  for (int i = 0; i < 10; ++i) data.push_back(record("maj" + std::to_string(i), 0, {double(i)}));
  for (int i = 0; i < 4; ++i) data.push_back(record("min" + std::to_string(i), 1, {double(i)}));
  const auto out = smote(data, 2, 4, 3);
  std::size_t maj = 0, min = 0, synth = 0;
  for (const auto& r : out) {
    (r.label == 0 ? maj : min) += 1;
    synth += r.synthetic;
  }
  CHECK(maj == 4);
  CHECK(min == 4);
  CHECK(synth == 0);
  CHECK(out.size() == 8);
}

TEST_CASE("single-class input is rejected") {
  std::vector<FeatureRecord> data{record("a", 1, {0.0}), record("b", 1, {1.0})};
  CHECK_THROWS_AS(smote(data, 1, 4, 1), std::invalid_argument);
}

TEST_CASE("a singleton minority cannot be interpolated") {
  std::vector<FeatureRecord> data{record("a", 1, {0.0}), record("b", 0, {1.0}),
                                  record("c", 0, {2.0}), record("d", 0, {3.0})};
  CHECK_THROWS_WITH_AS(smote(data, 1, 3, 1), doctest::Contains("singleton"),
                       std::invalid_argument);
}

TEST_CASE("m below the minority count is rejected") {
  std::vector<FeatureRecord> data{record("a", 1, {0.0}), record("b", 1, {1.0}),
                                  record("c", 1, {2.0}), record("d", 0, {3.0}),
                                  record("e", 0, {4.0}), record("f", 0, {5.0})};
  CHECK_THROWS_AS(smote(data, 1, 2, 1), std::invalid_argument);
}

TEST_CASE("smote is deterministic per seed") {
  Rng rng(5);
  const auto data = random_dataset(rng, 5, 20, 3);
  const auto a = smote(data, 3, 12, 77);
  const auto b = smote(data, 3, 12, 77);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].features == b[i].features);
  }
}

TEST_CASE("smote contract holds on 200 random datasets") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_min = 2 + rng.index(6);
    const std::size_t n_maj = n_min + rng.index(20);
    const int dim = 2 + static_cast<int>(rng.index(4));
    const auto data = random_dataset(rng, n_min, n_maj, dim);
    const int m = static_cast<int>(n_min + rng.index(n_maj - n_min + 5));
    const int k = 1 + static_cast<int>(rng.index(4));

    const auto out = smote(data, k, m, rng.next_u64());

    std::vector<FeatureRecord> minority_originals;
    std::set<std::string> out_ids;
    std::size_t n_min_out = 0, n_maj_out = 0;
    for (const auto& r : data)
      if (r.label == 1) minority_originals.push_back(r);
    for (const auto& r : out) {
      out_ids.insert(r.id);
      (r.label == 1 ? n_min_out : n_maj_out) += 1;
      if (r.synthetic) {
        CAPTURE(trial);
        CHECK(r.label == 1);
        CHECK(convex_residual(r, minority_originals) < 1e-9);
      }
    }
    // exact postcondition counts
    CHECK(n_min_out == static_cast<std::size_t>(m));
    CHECK(n_maj_out == std::min(n_maj, static_cast<std::size_t>(m)));
    // original minority records are never dropped
    for (const auto& r : minority_originals) CHECK(out_ids.count(r.id) == 1);
  }
}

TEST_CASE("rebalance_ratio maps factors onto per-class targets") {
  Rng rng(9);

  SUBCASE("factor 1 is a full undersample") {
    const auto data = random_dataset(rng, 4, 11, 2);
    const auto out = rebalance_ratio(data, 1.0, 5);
    std::size_t maj = 0, min = 0;
    for (const auto& r : out) (r.label == 0 ? maj : min) += 1;
    CHECK(maj == 4);
    CHECK(min == 4);
  }

  SUBCASE("a huge factor is a full oversample") {
    const auto data = random_dataset(rng, 4, 11, 2);
    const auto out = rebalance_ratio(data, 1e9, 5);
    std::size_t maj = 0, min = 0;
    for (const auto& r : out) (r.label == 0 ? maj : min) += 1;
    CHECK(maj == 11);
    CHECK(min == 11);
  }

  SUBCASE("minority 100, majority 1000, factor 5 gives 500 per class") {
    const auto data = random_dataset(rng, 100, 1000, 2);
    const auto out = rebalance_ratio(data, 5.0, 5);
    std::size_t maj = 0, min = 0;
    for (const auto& r : out) (r.label == 0 ? maj : min) += 1;
    CHECK(maj == 500);
    CHECK(min == 500);
  }

  SUBCASE("factor below 1 is rejected") {
    const auto data = random_dataset(rng, 4, 11, 2);
    CHECK_THROWS_AS(rebalance_ratio(data, 0.5, 5), std::invalid_argument);
  }
}

TEST_CASE("feature records round-trip through JSONL") {
  testutil::TempDir tmp("records");
  std::vector<FeatureRecord> data{record("a", 1, {0.25, -1.5}), record("b", 0, {3.0, 4.0})};
  data[0].synthetic = true;
  save_records(data, tmp.path("r.jsonl"));
  const auto back = load_records(tmp.path("r.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[0].synthetic);
  CHECK(back[0].features == data[0].features);
  CHECK(back[1].label == 0);
}
