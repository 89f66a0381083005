#include "reveal/repr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "reveal/nn/tape.hpp"
#include "reveal/stats.hpp"

namespace reveal {

using nlohmann::json;
using nn::Tensor;

double cosine_distance(const std::vector<double>& v1, const std::vector<double>& v2) {
  if (v1.size() != v2.size()) throw std::invalid_argument("cosine_distance: length mismatch");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    dot += v1[i] * v2[i];
    n1 += v1[i] * v1[i];
    n2 += v2[i] * v2[i];
  }
  if (n1 == 0.0 || n2 == 0.0) throw std::invalid_argument("undefined cosine distance: zero vector");
  return 1.0 - std::fabs(dot / (std::sqrt(n1) * std::sqrt(n2)));
}

double projection_loss(const std::vector<double>& h, const std::vector<double>& h_same,
                       const std::vector<double>& h_diff, double gamma) {
  return std::fabs(cosine_distance(h, h_same) - cosine_distance(h, h_diff) + gamma);
}

double regularization_loss(const std::vector<double>& h, const std::vector<double>& h_same,
                           const std::vector<double>& h_diff) {
  auto norm = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
  };
  return norm(h) + norm(h_same) + norm(h_diff);
}

void TripletBatch::validate() const {
  if (anchors.size() != sames.size() || anchors.size() != diffs.size())
    throw std::invalid_argument("triplet batch: misaligned members");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (sames[i].label != anchors[i].label)
      throw std::invalid_argument("triplet batch: same-class member has a different label");
    if (diffs[i].label == anchors[i].label)
      throw std::invalid_argument("triplet batch: different-class member shares the label");
  }
}

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_label(
    const std::vector<FeatureRecord>& records) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < records.size(); ++i)
    (records[i].label == 1 ? pos : neg).push_back(i);
  return {std::move(pos), std::move(neg)};
}

std::size_t draw_companion(const std::vector<std::size_t>& members, std::size_t avoid, Rng& rng) {
  if (members.size() < 2) return members[0];
  std::size_t pick;
  do {
    pick = members[rng.index(members.size())];
  } while (pick == avoid);
  return pick;
}

Tensor features_matrix(const std::vector<FeatureRecord>& records) {
  if (records.empty()) throw std::invalid_argument("empty record list");
  const int dim = static_cast<int>(records[0].features.size());
  Tensor x(static_cast<int>(records.size()), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (static_cast<int>(records[i].features.size()) != dim)
      throw std::invalid_argument("inconsistent feature lengths");
    std::copy(records[i].features.begin(), records[i].features.end(),
              x.data.begin() + static_cast<std::ptrdiff_t>(i) * dim);
  }
  return x;
}

}  // namespace

TripletBatch sample_triplets(const std::vector<FeatureRecord>& train, int batch_size,
                             std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("sample_triplets: batch size must be positive");
  auto [pos, neg] = split_by_label(train);
  if (pos.empty() || neg.empty()) throw std::invalid_argument("sample_triplets: single-class set");
  Rng rng(seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  TripletBatch batch;
  const std::size_t n = std::min<std::size_t>(order.size(), static_cast<std::size_t>(batch_size));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = order[i];
    const auto& same_pool = train[a].label == 1 ? pos : neg;
    const auto& diff_pool = train[a].label == 1 ? neg : pos;
    batch.anchors.push_back(train[a]);
    batch.sames.push_back(train[draw_companion(same_pool, a, rng)]);
    batch.diffs.push_back(train[diff_pool[rng.index(diff_pool.size())]]);
  }
  batch.validate();
  return batch;
}

namespace {

struct TripletLossVars {
  nn::Tape::Var loss;
  nn::Tape::Var anchor_latent;
};

// 1 - |row-wise cosine| between two latent matrices.
nn::Tape::Var rowwise_cosine_distance(nn::Tape& t, nn::Tape::Var a, nn::Tape::Var b) {
  nn::Tape::Var dot = t.row_dot(a, b);
  nn::Tape::Var na = t.sqrt_(t.row_dot(a, a));
  nn::Tape::Var nb = t.sqrt_(t.row_dot(b, b));
  nn::Tape::Var cos = t.div(dot, t.mul(na, nb));
  return t.affine(t.abs_(cos), -1.0, 1.0);
}

void check_nonzero_rows(const Tensor& row_norms_sq) {
  for (double v : row_norms_sq.data)
    if (v == 0.0)
      throw std::runtime_error("undefined cosine distance: zero latent representation");
}

TripletLossVars triplet_loss_graph(nn::Tape& t, const nn::MlpVars& mlp, const TripletBatch& batch,
                                   const TripletConfig& cfg, bool training, Rng& rng) {
  std::vector<int> labels;
  labels.reserve(batch.anchors.size());
  for (const auto& r : batch.anchors) labels.push_back(r.label);

  nn::Tape::Var xa = t.constant(features_matrix(batch.anchors));
  auto a_out = nn::mlp_graph(t, mlp, xa, cfg.dropout, training, rng);
  nn::Tape::Var ce = t.mean_all(t.softmax_ce(a_out.logits, labels));

  TripletLossVars out;
  out.anchor_latent = a_out.latent;
  if (cfg.loss == LossKind::kNll || (cfg.alpha == 0.0 && cfg.beta == 0.0)) {
    out.loss = ce;
    return out;
  }

  nn::Tape::Var xs = t.constant(features_matrix(batch.sames));
  nn::Tape::Var xd = t.constant(features_matrix(batch.diffs));
  auto s_out = nn::mlp_graph(t, mlp, xs, cfg.dropout, training, rng);
  auto d_out = nn::mlp_graph(t, mlp, xd, cfg.dropout, training, rng);

  nn::Tape::Var na = t.row_dot(a_out.latent, a_out.latent);
  nn::Tape::Var ns = t.row_dot(s_out.latent, s_out.latent);
  nn::Tape::Var nd = t.row_dot(d_out.latent, d_out.latent);
  check_nonzero_rows(t.value(na));
  check_nonzero_rows(t.value(ns));
  check_nonzero_rows(t.value(nd));

  nn::Tape::Var d_same = rowwise_cosine_distance(t, a_out.latent, s_out.latent);
  nn::Tape::Var d_diff = rowwise_cosine_distance(t, a_out.latent, d_out.latent);
  nn::Tape::Var margin = t.affine(t.sub(d_same, d_diff), 1.0, cfg.gamma);
  nn::Tape::Var lp = t.mean_all(cfg.hinge ? t.relu(margin) : t.abs_(margin));
  nn::Tape::Var lreg =
      t.mean_all(t.add(t.add(t.sqrt_(na), t.sqrt_(ns)), t.sqrt_(nd)));
  out.loss = t.add(ce, t.add(t.affine(lp, cfg.alpha, 0.0), t.affine(lreg, cfg.beta, 0.0)));
  return out;
}

}  // namespace

double triplet_loss(const TripletBatch& batch, const nn::MlpParams& params,
                    const TripletConfig& cfg) {
  if (batch.anchors.empty()) throw std::invalid_argument("triplet_loss: empty batch");
  batch.validate();
  nn::Tape t;
  nn::MlpVars vars;
  auto& mut = const_cast<nn::MlpParams&>(params);
  for (std::size_t i = 0; i < mut.weights.size(); ++i) {
    vars.weights.push_back(t.constant(mut.weights[i]));
    vars.biases.push_back(t.constant(mut.biases[i]));
  }
  Rng rng(0);
  return t.value(triplet_loss_graph(t, vars, batch, cfg, false, rng).loss).data[0];
}

nn::Tape::Var triplet_loss_from_leaves(nn::Tape& t, const std::vector<nn::Tape::Var>& leaves,
                                       const TripletBatch& batch, const TripletConfig& cfg) {
  if (leaves.size() < 4 || leaves.size() % 2 != 0)
    throw std::invalid_argument("triplet loss: leaves must come in weight/bias pairs");
  batch.validate();
  nn::MlpVars vars;
  for (std::size_t i = 0; i < leaves.size(); i += 2) {
    vars.weights.push_back(leaves[i]);
    vars.biases.push_back(leaves[i + 1]);
  }
  Rng rng(0);
  return triplet_loss_graph(t, vars, batch, cfg, false, rng).loss;
}

nn::MlpParams train_repr(const std::vector<FeatureRecord>& train,
                         const std::vector<FeatureRecord>& valid, const TripletConfig& cfg,
                         ReprTrainLog* log) {
  if (train.empty() || valid.empty())
    throw std::invalid_argument("train_repr: empty train or valid split");
  auto [pos, neg] = split_by_label(train);
  if (pos.empty() || neg.empty()) throw std::invalid_argument("train_repr: single-class training set");

  const int input_dim = static_cast<int>(train[0].features.size());
  Rng rng(cfg.seed);
  nn::MlpParams params = nn::MlpParams::init(input_dim, cfg.hidden, 2, cfg.dropout, rng);

  auto refs = params.params();
  std::vector<Tensor*> param_ptrs;
  for (auto& [name, t] : refs) param_ptrs.push_back(t);
  nn::AdamState opt = nn::AdamState::like(param_ptrs);
  nn::AdamConfig adam;
  adam.lr = cfg.lr;

  nn::MlpParams best = params;
  double best_f1 = -1.0;
  int best_epoch = -1;
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      TripletBatch batch;
      const bool with_companions = cfg.loss == LossKind::kTriplet;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t a = order[i];
        batch.anchors.push_back(train[a]);
        if (with_companions) {
          const auto& same_pool = train[a].label == 1 ? pos : neg;
          const auto& diff_pool = train[a].label == 1 ? neg : pos;
          batch.sames.push_back(train[draw_companion(same_pool, a, rng)]);
          batch.diffs.push_back(train[diff_pool[rng.index(diff_pool.size())]]);
        }
      }
      nn::Tape tape;
      nn::MlpVars vars = nn::mlp_leaves(tape, params);
      auto built = triplet_loss_graph(tape, vars, batch, cfg, true, rng);
      const double loss_value = tape.value(built.loss).data[0];
      if (!std::isfinite(loss_value)) throw std::runtime_error("train_repr: non-finite loss");
      tape.backward(built.loss);
      std::vector<const Tensor*> grads;
      for (std::size_t i = 0; i < vars.weights.size(); ++i) {
        grads.push_back(&tape.grad(vars.weights[i]));
        grads.push_back(&tape.grad(vars.biases[i]));
      }
      nn::adam_step(param_ptrs, grads, opt, adam);
      epoch_loss += loss_value;
      ++batches;
    }

    std::vector<int> preds, labels;
    for (const auto& p : predict(valid, params)) {
      preds.push_back(p.pred);
      labels.push_back(p.label);
    }
    const double f1 = compute_metrics(preds, labels).f1;
    if (log) log->epochs.push_back({epoch, epoch_loss / static_cast<double>(batches), f1});
    if (f1 > best_f1) {
      best_f1 = f1;
      best = params;
      best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }

  if (log) {
    log->best_epoch = best_epoch;
    log->best_valid_f1 = best_f1;
  }
  return best;
}

std::vector<Prediction> predict(const std::vector<FeatureRecord>& records,
                                const nn::MlpParams& params) {
  std::vector<Prediction> out;
  if (records.empty()) return out;
  const Tensor x = features_matrix(records);
  if (x.cols != params.input_dim())
    throw std::invalid_argument("predict: feature length " + std::to_string(x.cols) +
                                " does not match model input " +
                                std::to_string(params.input_dim()));
  const auto fwd = nn::mlp_forward(params, x);
  const Tensor probs = nn::softmax_rows(fwd.logits);
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Prediction p;
    p.id = records[i].id;
    p.label = records[i].label;
    p.prob = probs.at(static_cast<int>(i), 1);
    p.pred = probs.at(static_cast<int>(i), 1) > probs.at(static_cast<int>(i), 0) ? 1 : 0;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<double>> latent_of(const std::vector<FeatureRecord>& records,
                                           const nn::MlpParams& params) {
  std::vector<std::vector<double>> out;
  if (records.empty()) return out;
  const Tensor x = features_matrix(records);
  const auto fwd = nn::mlp_forward(params, x);
  out.reserve(records.size());
  for (int i = 0; i < fwd.latent.rows; ++i)
    out.emplace_back(fwd.latent.data.begin() + static_cast<std::ptrdiff_t>(i) * fwd.latent.cols,
                     fwd.latent.data.begin() + static_cast<std::ptrdiff_t>(i + 1) * fwd.latent.cols);
  return out;
}

namespace {

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j) {
  Tensor t(j.at("rows").get<int>(), j.at("cols").get<int>());
  t.data = j.at("data").get<std::vector<double>>();
  if (t.data.size() != static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.cols))
    throw std::runtime_error("checkpoint tensor size mismatch");
  return t;
}

}  // namespace

void save_repr(const nn::MlpParams& p, const nn::AdamState& opt, const std::string& path,
               const std::string& config_hash, std::uint64_t seed) {
  json layers = json::array();
  for (std::size_t i = 0; i < p.weights.size(); ++i)
    layers.push_back(json{{"w", tensor_to_json(p.weights[i])}, {"b", tensor_to_json(p.biases[i])}});
  json jopt = json::object();
  if (!opt.empty()) {
    json jm = json::array(), jv = json::array();
    for (const auto& t : opt.m) jm.push_back(tensor_to_json(t));
    for (const auto& t : opt.v) jv.push_back(tensor_to_json(t));
    jopt = json{{"m", std::move(jm)}, {"v", std::move(jv)}, {"step", opt.step}};
  }
  json j{{"kind", "repr"},
         {"dropout", p.dropout},
         {"layers", std::move(layers)},
         {"opt", std::move(jopt)},
         {"step", opt.step},
         {"seed", seed},
         {"config_hash", config_hash}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
}

nn::MlpParams load_repr(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed JSON: " + e.what());
  }
  if (j.value("kind", std::string{}) != "repr")
    throw std::runtime_error(path + ": not a repr checkpoint");
  nn::MlpParams p;
  p.dropout = j.at("dropout").get<double>();
  for (const auto& layer : j.at("layers")) {
    p.weights.push_back(tensor_from_json(layer.at("w")));
    p.biases.push_back(tensor_from_json(layer.at("b")));
  }
  if (p.weights.size() < 2) throw std::runtime_error(path + ": checkpoint has too few layers");
  return p;
}

void save_predictions(const std::vector<Prediction>& preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  for (const auto& p : preds) {
    json j{{"id", p.id}, {"prob", p.prob}, {"pred", p.pred}, {"label", p.label}};
    out << j.dump() << '\n';
  }
}

}  // namespace reveal
