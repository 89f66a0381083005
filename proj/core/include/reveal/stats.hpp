#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace reveal {

// Confusion counts and derived classification metrics. A metric whose
// denominator is zero is reported as 0 with its `undefined` flag set.
struct RunMetrics {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

RunMetrics compute_metrics(const std::vector<int>& preds, const std::vector<int>& labels);

struct MetricDistribution {
  std::vector<double> values;
  double median = 0.0;
  double iqr = 0.0;
};

MetricDistribution make_distribution(std::vector<double> values);

// Median by the midpoint convention; IQR = Q3 - Q1 with inclusive
// linear-interpolation quantiles.
std::pair<double, double> median_iqr(const std::vector<double>& values);
double median_of(std::vector<double> values);
double quantile_inclusive(std::vector<double> values, double q);

// Two-sided bootstrap test on the difference in means, resampling from
// the pooled values under the null. Returns the fraction of resampled
// |mean difference| at least as large as the observed one.
double bootstrap_test(const std::vector<double>& a, const std::vector<double>& b, int resamples,
                      std::uint64_t seed);
double bootstrap_test(const std::vector<double>& a, const std::vector<double>& b,
                      std::uint64_t seed);

// Vargha-Delaney A12: P(a > b) + 0.5 P(a = b) over all pairs.
double a12(const std::vector<double>& a, const std::vector<double>& b);

enum class Verdict { kDistinct, kIndistinct };

// Distinct iff the bootstrap p-value is at most 0.01 and the effect is
// at least medium in either direction (max(A12, 1-A12) >= 0.6).
Verdict compare(const std::vector<double>& a, const std::vector<double>& b, std::uint64_t seed);

struct ComparisonDetail {
  double p_value = 1.0;
  double a12 = 0.5;
  Verdict verdict = Verdict::kIndistinct;
};
ComparisonDetail compare_detail(const std::vector<double>& a, const std::vector<double>& b,
                                std::uint64_t seed);

struct RankedTreatment {
  int rank = 1;
  std::string name;
  double median = 0.0;
  double iqr = 0.0;
};

// Scott-Knott: orders treatments by median, recursively splits at the
// point maximizing the between-group sum of squares, and accepts a split
// only when compare() on the two sides says distinct. Rank 1 is best;
// treatments inside an accepted group share a rank.
std::vector<RankedTreatment> scott_knott(
    const std::map<std::string, std::vector<double>>& treatments, std::uint64_t seed);

// Euclidean distance between the per-class mean vectors.
double centroid_distance(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels);

}  // namespace reveal
