#include "reveal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "reveal/rng.hpp"

namespace reveal {

RunMetrics compute_metrics(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw std::invalid_argument("compute_metrics: prediction/label length mismatch");
  if (preds.empty()) throw std::invalid_argument("compute_metrics: empty input");
  RunMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == 1;
    const bool y = labels[i] == 1;
    if (p && y)
      ++m.tp;
    else if (p && !y)
      ++m.fp;
    else if (!p && y)
      ++m.fn;
    else
      ++m.tn;
  }
  const double n = static_cast<double>(preds.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;
  if (m.tp + m.fp > 0)
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  else
    m.precision_undefined = true;
  if (m.tp + m.fn > 0)
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  else
    m.recall_undefined = true;
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.f1_undefined = true;
  return m;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double quantile_inclusive(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty list");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::pair<double, double> median_iqr(const std::vector<double>& values) {
  const double med = median_of(values);
  const double iqr = quantile_inclusive(values, 0.75) - quantile_inclusive(values, 0.25);
  return {med, iqr};
}

MetricDistribution make_distribution(std::vector<double> values) {
  MetricDistribution d;
  auto [med, iqr] = median_iqr(values);
  d.values = std::move(values);
  d.median = med;
  d.iqr = iqr;
  return d;
}

namespace {

double mean_of(const std::vector<double>& values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

}  // namespace

double bootstrap_test(const std::vector<double>& a, const std::vector<double>& b, int resamples,
                      std::uint64_t seed) {
  if (a.empty() || b.empty()) throw std::invalid_argument("bootstrap_test: empty sample");
  if (resamples < 1) throw std::invalid_argument("bootstrap_test: resamples must be positive");
  // Mean difference as the test statistic. A median statistic looked
  // tempting (the runs aggregate by medians) but its resampled value can
  // only land on pooled data points, which leaves small samples with a
  // p-value floor above 0.01 even for fully separated inputs.
  const double observed = std::fabs(mean_of(a) - mean_of(b));
  std::vector<double> pool;
  pool.reserve(a.size() + b.size());
  pool.insert(pool.end(), a.begin(), a.end());
  pool.insert(pool.end(), b.begin(), b.end());

  Rng rng(seed);
  long hits = 0;
  for (int r = 0; r < resamples; ++r) {
    double sum_a = 0.0, sum_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum_a += pool[rng.index(pool.size())];
    for (std::size_t i = 0; i < b.size(); ++i) sum_b += pool[rng.index(pool.size())];
    const double diff = std::fabs(sum_a / static_cast<double>(a.size()) -
                                  sum_b / static_cast<double>(b.size()));
    if (diff >= observed) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(resamples);
}

double bootstrap_test(const std::vector<double>& a, const std::vector<double>& b,
                      std::uint64_t seed) {
  return bootstrap_test(a, b, 10000, seed);
}

double a12(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("a12: empty sample");
  double wins = 0.0;
  for (double x : a)
    for (double y : b) {
      if (x > y)
        wins += 1.0;
      else if (x == y)
        wins += 0.5;
    }
  return wins / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

ComparisonDetail compare_detail(const std::vector<double>& a, const std::vector<double>& b,
                                std::uint64_t seed) {
  ComparisonDetail d;
  d.p_value = bootstrap_test(a, b, seed);
  d.a12 = a12(a, b);
  const double effect = std::max(d.a12, 1.0 - d.a12);
  d.verdict = (d.p_value <= 0.01 && effect >= 0.6) ? Verdict::kDistinct : Verdict::kIndistinct;
  return d;
}

Verdict compare(const std::vector<double>& a, const std::vector<double>& b, std::uint64_t seed) {
  return compare_detail(a, b, seed).verdict;
}

namespace {

struct Treatment {
  std::string name;
  std::vector<double> values;
  double median;
};

// Between-group sum of squares over the run values for a candidate cut.
double split_score(const std::vector<Treatment>& ts, std::size_t lo, std::size_t hi,
                   std::size_t cut) {
  double sum_all = 0.0, n_all = 0.0;
  double sum_l = 0.0, n_l = 0.0, sum_r = 0.0, n_r = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    for (double v : ts[i].values) {
      sum_all += v;
      n_all += 1.0;
      if (i < cut) {
        sum_l += v;
        n_l += 1.0;
      } else {
        sum_r += v;
        n_r += 1.0;
      }
    }
  }
  const double mean_all = sum_all / n_all;
  const double mean_l = sum_l / n_l;
  const double mean_r = sum_r / n_r;
  return n_l * (mean_l - mean_all) * (mean_l - mean_all) +
         n_r * (mean_r - mean_all) * (mean_r - mean_all);
}

void partition(const std::vector<Treatment>& ts, std::size_t lo, std::size_t hi,
               std::uint64_t seed, std::vector<std::size_t>& group_of, std::size_t& next_group) {
  if (hi - lo <= 1) {
    const std::size_t g = next_group++;
    for (std::size_t i = lo; i < hi; ++i) group_of[i] = g;
    return;
  }
  double best = -1.0;
  std::size_t best_cut = lo + 1;
  for (std::size_t cut = lo + 1; cut < hi; ++cut) {
    const double s = split_score(ts, lo, hi, cut);
    if (s > best) {
      best = s;
      best_cut = cut;
    }
  }
  std::vector<double> left, right;
  for (std::size_t i = lo; i < best_cut; ++i)
    left.insert(left.end(), ts[i].values.begin(), ts[i].values.end());
  for (std::size_t i = best_cut; i < hi; ++i)
    right.insert(right.end(), ts[i].values.begin(), ts[i].values.end());
  if (compare(left, right, seed) == Verdict::kDistinct) {
    partition(ts, lo, best_cut, seed, group_of, next_group);
    partition(ts, best_cut, hi, seed, group_of, next_group);
  } else {
    const std::size_t g = next_group++;
    for (std::size_t i = lo; i < hi; ++i) group_of[i] = g;
  }
}

}  // namespace

std::vector<RankedTreatment> scott_knott(
    const std::map<std::string, std::vector<double>>& treatments, std::uint64_t seed) {
  if (treatments.empty()) throw std::invalid_argument("scott_knott: no treatments");
  std::vector<Treatment> ts;
  for (const auto& [name, values] : treatments) {
    if (values.empty())
      throw std::invalid_argument("scott_knott: treatment \"" + name + "\" has no values");
    ts.push_back({name, values, median_of(values)});
  }
  // best median first; name breaks ties deterministically
  std::stable_sort(ts.begin(), ts.end(), [](const Treatment& a, const Treatment& b) {
    if (a.median != b.median) return a.median > b.median;
    return a.name < b.name;
  });

  std::vector<std::size_t> group_of(ts.size(), 0);
  std::size_t next_group = 0;
  partition(ts, 0, ts.size(), seed, group_of, next_group);

  std::vector<RankedTreatment> out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto [med, iqr] = median_iqr(ts[i].values);
    RankedTreatment r;
    r.rank = static_cast<int>(group_of[i]) + 1;
    r.name = ts[i].name;
    r.median = med;
    r.iqr = iqr;
    out.push_back(std::move(r));
  }
  return out;
}

double centroid_distance(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels) {
  if (features.size() != labels.size())
    throw std::invalid_argument("centroid_distance: feature/label length mismatch");
  std::vector<double> c0, c1;
  long n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& c = labels[i] == 1 ? c1 : c0;
    auto& n = labels[i] == 1 ? n1 : n0;
    if (c.empty()) c.assign(features[i].size(), 0.0);
    if (c.size() != features[i].size())
      throw std::invalid_argument("centroid_distance: inconsistent feature lengths");
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += features[i][d];
    ++n;
  }
  if (n0 == 0 || n1 == 0) throw std::invalid_argument("centroid_distance: single class");
  double acc = 0.0;
  for (std::size_t d = 0; d < c0.size(); ++d) {
    const double diff = c0[d] / static_cast<double>(n0) - c1[d] / static_cast<double>(n1);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace reveal
