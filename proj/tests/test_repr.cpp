#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>

#include "reveal/nn/grad_check.hpp"
#include "reveal/repr.hpp"
#include "reveal/stats.hpp"
#include "support.hpp"

using namespace reveal;
using testutil::record;

TEST_CASE("cosine distance follows the absolute-value formula") {
  CHECK(cosine_distance({1, 0}, {1, 0}) == doctest::Approx(0.0));
  CHECK(cosine_distance({1, 0}, {0, 1}) == doctest::Approx(1.0));
  // antiparallel vectors collapse to distance 0 under the |.|
  CHECK(cosine_distance({1, 0}, {-1, 0}) == doctest::Approx(0.0));
  CHECK_THROWS_WITH_AS(cosine_distance({0, 0}, {1, 0}), doctest::Contains("undefined cosine"),
                       std::invalid_argument);
}

TEST_CASE("cosine distance ignores positive scaling of either argument") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = rng.uniform(-2.0, 2.0);
    for (auto& v : b) v = rng.uniform(-2.0, 2.0);
    const double c1 = rng.uniform(0.01, 10.0);
    const double c2 = rng.uniform(0.01, 10.0);
    std::vector<double> sa = a, sb = b;
    for (auto& v : sa) v *= c1;
    for (auto& v : sb) v *= c2;
    CHECK(cosine_distance(sa, sb) == doctest::Approx(cosine_distance(a, b)).epsilon(1e-10));
  }
}

TEST_CASE("projection loss evaluates the margin form exactly") {
  const std::vector<double> h{1.0, 0.0};
  const std::vector<double> same{0.8, 0.6};    // D = 1 - 0.8 = 0.2
  const std::vector<double> diff{0.1, std::sqrt(1.0 - 0.01)};  // D = 0.9
  CHECK(projection_loss(h, same, diff, 0.5) == doctest::Approx(0.2).epsilon(1e-12));

  // equal distances leave exactly the margin
  CHECK(projection_loss(h, {0.6, 0.8}, {0.6, 0.8}, 0.5) == doctest::Approx(0.5));

  // D_same = 0, D_diff = 1
  CHECK(projection_loss(h, {2.0, 0.0}, {0.0, 3.0}, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("regularization loss sums the three norms") {
  CHECK(regularization_loss({1, 0}, {0, 1}, {0, -1}) == doctest::Approx(3.0));
  CHECK(regularization_loss({0, 0}, {0, 0}, {0, 0}) == doctest::Approx(0.0));
  CHECK(regularization_loss({3, 4}, {0, 0}, {0, 0}) == doctest::Approx(5.0));
}

namespace {

nn::MlpParams tiny_mlp(int input, std::vector<int> hidden, std::uint64_t seed) {
  Rng rng(seed);
  return nn::MlpParams::init(input, hidden, 2, 0.0, rng);
}

TripletBatch one_triplet(std::vector<double> a, std::vector<double> s, std::vector<double> d,
                         int anchor_label) {
  TripletBatch b;
  b.anchors.push_back(record("a", anchor_label, std::move(a)));
  b.sames.push_back(record("s", anchor_label, std::move(s)));
  b.diffs.push_back(record("d", 1 - anchor_label, std::move(d)));
  return b;
}

// The whole objective written out long-hand on scalars, no library calls.
double straight_line_loss(const nn::MlpParams& p, const TripletBatch& batch, double gamma,
                          double alpha, double beta) {
  auto forward = [&](const std::vector<double>& x) {
    std::vector<double> act = x;
    std::vector<std::vector<double>> latents;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      const auto& w = p.weights[l];
      std::vector<double> next(static_cast<std::size_t>(w.rows), 0.0);
      for (int i = 0; i < w.rows; ++i) {
        double acc = p.biases[l].data[i];
        for (int j = 0; j < w.cols; ++j) acc += w.at(i, j) * act[static_cast<std::size_t>(j)];
        next[static_cast<std::size_t>(i)] = acc;
      }
      if (l + 1 < p.weights.size())
        for (auto& v : next) v = v > 0.0 ? v : 0.0;
      latents.push_back(next);
      act = next;
    }
    return std::pair{latents[latents.size() - 2], act};  // latent, logits
  };

  auto norm = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
  };
  auto cosdist = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    return 1.0 - std::fabs(dot / (norm(u) * norm(v)));
  };

  double ce = 0.0, lp = 0.0, lreg = 0.0;
  for (std::size_t i = 0; i < batch.anchors.size(); ++i) {
    const auto [ha, logits] = forward(batch.anchors[i].features);
    const auto [hs, logits_s] = forward(batch.sames[i].features);
    const auto [hd, logits_d] = forward(batch.diffs[i].features);
    (void)logits_s;
    (void)logits_d;
    const double mx = std::max(logits[0], logits[1]);
    const double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
    ce += lse - logits[static_cast<std::size_t>(batch.anchors[i].label)];
    lp += std::fabs(cosdist(ha, hs) - cosdist(ha, hd) + gamma);
    lreg += norm(ha) + norm(hs) + norm(hd);
  }
  const double n = static_cast<double>(batch.anchors.size());
  return ce / n + alpha * lp / n + beta * lreg / n;
}

}  // namespace

TEST_CASE("triplet loss matches a straight-line evaluation to 1e-10") {
  auto params = tiny_mlp(3, {5, 4}, 17);
  const auto batch = one_triplet({0.5, -0.2, 1.0}, {0.4, -0.1, 0.9}, {-1.0, 0.8, -0.3}, 1);
  TripletConfig cfg;
  cfg.gamma = 0.5;
  cfg.alpha = 0.5;
  cfg.beta = 0.001;
  const double got = triplet_loss(batch, params, cfg);
  const double want = straight_line_loss(params, batch, 0.5, 0.5, 0.001);
  CHECK(std::fabs(got - want) < 1e-10);
}

TEST_CASE("with alpha and beta at zero the loss is exactly the mean cross-entropy") {
  auto params = tiny_mlp(3, {6}, 23);
  TripletBatch batch = one_triplet({0.5, -0.2, 1.0}, {0.4, -0.1, 0.9}, {-1.0, 0.8, -0.3}, 1);
  batch.anchors.push_back(record("a2", 0, {-0.3, 0.9, 0.2}));
  batch.sames.push_back(record("s2", 0, {-0.2, 0.8, 0.1}));
  batch.diffs.push_back(record("d2", 1, {0.9, -0.5, 0.4}));
  TripletConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  const double got = triplet_loss(batch, params, cfg);
  const double want = straight_line_loss(params, batch, cfg.gamma, 0.0, 0.0);
  CHECK(std::fabs(got - want) < 1e-12);
}

TEST_CASE("perfect confident predictions drive the cross-entropy toward zero") {
  auto params = tiny_mlp(2, {4}, 29);
  // craft a head that puts a huge logit on the true class
  params.weights.back() = nn::Tensor(2, 4);
  params.biases.back() = nn::Tensor(1, 2, {50.0, -50.0});
  TripletBatch batch = one_triplet({1.0, 0.0}, {0.9, 0.1}, {0.0, 1.0}, 0);
  TripletConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  CHECK(triplet_loss(batch, params, cfg) < 1e-12);
}

TEST_CASE("triplet loss is nonnegative on random inputs") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    auto params = tiny_mlp(4, {6, 5}, rng.next_u64());
    for (std::size_t l = 0; l + 1 < params.biases.size(); ++l)
      for (auto& v : params.biases[l].data) v = 1.0;
    TripletBatch batch;
    const int n = 1 + static_cast<int>(rng.index(4));
    for (int i = 0; i < n; ++i) {
      auto vec = [&] {
        std::vector<double> v(4);
        for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        return v;
      };
      const int label = static_cast<int>(rng.index(2));
      batch.anchors.push_back(record("a", label, vec()));
      batch.sames.push_back(record("s", label, vec()));
      batch.diffs.push_back(record("d", 1 - label, vec()));
    }
    TripletConfig cfg;
    CHECK(triplet_loss(batch, params, cfg) >= 0.0);
  }
}

TEST_CASE("batch invariants are enforced") {
  TripletBatch bad = one_triplet({1, 0}, {0, 1}, {1, 1}, 1);
  bad.sames[0].label = 0;  // same-class member with a different label
  auto params = tiny_mlp(2, {4}, 3);
  CHECK_THROWS_AS(triplet_loss(bad, params, {}), std::invalid_argument);
}

TEST_CASE("sample_triplets returns aligned companions") {
  std::vector<FeatureRecord> train{record("p0", 1, {0, 0}), record("p1", 1, {1, 1}),
                                   record("n0", 0, {5, 5}), record("n1", 0, {6, 6})};
  const auto batch = sample_triplets(train, 2, 7);
  REQUIRE(batch.size() == 2);
  batch.validate();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch.sames[i].label == batch.anchors[i].label);
    CHECK(batch.diffs[i].label != batch.anchors[i].label);
    CHECK(batch.sames[i].id != batch.anchors[i].id);  // both classes have two members
  }

  const auto again = sample_triplets(train, 2, 7);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch.anchors[i].id == again.anchors[i].id);
    CHECK(batch.sames[i].id == again.sames[i].id);
    CHECK(batch.diffs[i].id == again.diffs[i].id);
  }

  CHECK_THROWS_AS(sample_triplets({record("x", 1, {0.0})}, 1, 3), std::invalid_argument);
}

TEST_CASE("companion draws are close to uniform over the class") {
  std::vector<FeatureRecord> train;
  for (int i = 0; i < 4; ++i) train.push_back(record("p" + std::to_string(i), 1, {double(i)}));
  for (int i = 0; i < 4; ++i) train.push_back(record("n" + std::to_string(i), 0, {double(i)}));
  std::map<std::string, std::map<std::string, int>> counts;
  int draws = 0;
  for (int s = 0; s < 1500; ++s) {
    const auto batch = sample_triplets(train, 8, 1000 + static_cast<std::uint64_t>(s));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      counts[batch.anchors[i].id][batch.sames[i].id] += 1;
      ++draws;
    }
  }
  CHECK(draws == 1500 * 8);
  // each anchor has 3 candidates; expect 1/3 within +-20 percent
  for (const auto& [anchor, picks] : counts) {
    int total = 0;
    for (const auto& [candidate, n] : picks) total += n;
    for (const auto& [candidate, n] : picks) {
      const double freq = static_cast<double>(n) / static_cast<double>(total);
      CAPTURE(anchor);
      CAPTURE(candidate);
      CHECK(freq > (1.0 / 3.0) * 0.8);
      CHECK(freq < (1.0 / 3.0) * 1.2);
    }
  }
}

TEST_CASE("gradients of the full objective match finite differences") {
  Rng rng(37);
  auto shape = tiny_mlp(5, {8, 6, 8}, 41);
  TripletBatch batch;
  for (int i = 0; i < 4; ++i) {
    auto vec = [&] {
      std::vector<double> v(5);
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
      return v;
    };
    const int label = i % 2;
    batch.anchors.push_back(record("a", label, vec()));
    batch.sames.push_back(record("s", label, vec()));
    batch.diffs.push_back(record("d", 1 - label, vec()));
  }
  TripletConfig cfg;
  std::vector<nn::Tensor> params;
  for (auto& [name, t] : shape.params()) params.push_back(*t);
  auto build = [&](nn::Tape& t, const std::vector<nn::Tape::Var>& leaves) {
    return triplet_loss_from_leaves(t, leaves, batch, cfg);
  };
  nn::GradCheckOptions opts;
  opts.samples = 300;
  CHECK(nn::grad_check(build, params, opts) < 1e-4);
}

namespace {

std::vector<FeatureRecord> gaussian_fixture(Rng& rng, int n, double vulnerable_fraction,
                                            double separation, int dim) {
  std::vector<FeatureRecord> out;
  for (int i = 0; i < n; ++i) {
    const bool vul = rng.uniform() < vulnerable_fraction;
    std::vector<double> f(dim);
    for (auto& v : f) v = rng.normal(vul ? separation : 0.0, 1.0);
    out.push_back(record("r" + std::to_string(i), vul ? 1 : 0, std::move(f)));
  }
  return out;
}

}  // namespace

TEST_CASE("training separates an easy synthetic fixture") {
  Rng rng(43);
  const auto train = gaussian_fixture(rng, 400, 0.5, 4.0, 6);
  const auto valid = gaussian_fixture(rng, 120, 0.5, 4.0, 6);
  TripletConfig cfg;
  cfg.hidden = {32, 16, 32};
  cfg.max_epochs = 30;
  cfg.patience = 5;
  cfg.batch = 64;
  cfg.seed = 3;
  ReprTrainLog log;
  train_repr(train, valid, cfg, &log);
  CHECK(log.best_valid_f1 >= 0.95);
}

TEST_CASE("training stops early on a plateau and is deterministic") {
  Rng rng(47);
  // weak signal: validation F1 plateaus almost immediately
  const auto train = gaussian_fixture(rng, 120, 0.5, 0.3, 4);
  const auto valid = gaussian_fixture(rng, 60, 0.5, 0.3, 4);
  TripletConfig cfg;
  cfg.hidden = {16, 16};
  cfg.dropout = 0.0;
  cfg.max_epochs = 100;
  cfg.patience = 3;
  cfg.batch = 32;
  cfg.seed = 11;
  ReprTrainLog log_a, log_b;
  train_repr(train, valid, cfg, &log_a);
  train_repr(train, valid, cfg, &log_b);
  CHECK(log_a.epochs.size() < 100);
  REQUIRE(log_a.epochs.size() == log_b.epochs.size());
  for (std::size_t i = 0; i < log_a.epochs.size(); ++i) {
    CHECK(log_a.epochs[i].train_loss == log_b.epochs[i].train_loss);
    CHECK(log_a.epochs[i].valid_f1 == log_b.epochs[i].valid_f1);
  }
  CHECK_THROWS_AS(train_repr({record("x", 1, {0.0})}, valid, cfg), std::invalid_argument);
}

TEST_CASE("the projection term widens latent class separation") {
  Rng rng(53);
  const auto train = gaussian_fixture(rng, 300, 0.2, 1.5, 6);
  const auto probe = gaussian_fixture(rng, 200, 0.5, 1.5, 6);
  auto run = [&](double alpha) {
    TripletConfig cfg;
    cfg.hidden = {32, 16, 32};
    cfg.dropout = 0.0;
    cfg.alpha = alpha;
    cfg.max_epochs = 12;
    cfg.patience = 12;
    cfg.batch = 64;
    cfg.seed = 5;
    const auto model = train_repr(train, train, cfg);
    const auto latents = latent_of(probe, model);
    std::vector<int> labels;
    for (const auto& r : probe) labels.push_back(r.label);
    return centroid_distance(latents, labels);
  };
  const double with_projection = run(0.5);
  const double without_projection = run(0.0);
  CHECK(with_projection / without_projection > 1.0);
}

TEST_CASE("predict emits calibrated, monotone softmax outputs") {
  auto params = tiny_mlp(3, {4}, 59);
  for (auto& w : params.weights)
    for (auto& v : w.data) v = 0.0;
  for (auto& b : params.biases)
    for (auto& v : b.data) v = 0.0;
  const std::vector<FeatureRecord> records{record("a", 1, {1, 2, 3}),
                                           record("b", 0, {-1, -2, -3})};
  const auto preds = predict(records, params);
  REQUIRE(preds.size() == 2);
  for (const auto& p : preds) {
    CHECK(p.prob == doctest::Approx(0.5));
    CHECK(p.pred == 0);  // argmax tie resolves to the clean class
  }

  // raising the class-1 bias strictly raises the class-1 probability
  double last = 0.0;
  for (double bias : {0.1, 0.5, 1.0, 2.0}) {
    params.biases.back().data = {0.0, bias};
    const auto out = predict(records, params);
    CHECK(out[0].prob > last);
    CHECK(out[0].prob + (1.0 - out[0].prob) == doctest::Approx(1.0));
    last = out[0].prob;
  }
  CHECK(last > 0.5);

  // dimension mismatches surface with both lengths in the message
  const std::vector<FeatureRecord> bad{record("c", 0, {1.0})};
  CHECK_THROWS_WITH_AS(predict(bad, params), doctest::Contains("length 1"),
                       std::invalid_argument);
}

TEST_CASE("repr checkpoints round-trip") {
  testutil::TempDir tmp("repr");
  auto params = tiny_mlp(4, {6, 5}, 61);
  save_repr(params, nn::AdamState{}, tmp.path("repr.json"), "hash", 7);
  const auto back = load_repr(tmp.path("repr.json"));
  const std::vector<FeatureRecord> records{record("a", 1, {0.1, 0.2, 0.3, 0.4})};
  const auto pa = predict(records, params);
  const auto pb = predict(records, back);
  CHECK(pa[0].prob == pb[0].prob);
}
