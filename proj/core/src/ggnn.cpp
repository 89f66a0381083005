#include "reveal/ggnn.hpp"

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

GgnnParams GgnnParams::init(const GgnnConfig& cfg, const std::vector<std::string>& edge_types,
                            int input_dim, Rng& rng) {
  if (input_dim > cfg.hidden)
    throw std::invalid_argument("ggnn: input dim " + std::to_string(input_dim) +
                                " exceeds hidden size " + std::to_string(cfg.hidden));
  GgnnParams p;
  p.edge_types = edge_types;
  p.input_dim = input_dim;
  p.steps = cfg.steps;
  p.shared_transform = cfg.shared_transform;
  p.reverse_edges = cfg.reverse_edges;
  const std::size_t n_transforms = cfg.shared_transform ? 1 : edge_types.size();
  for (std::size_t k = 0; k < n_transforms; ++k) {
    p.edge_w.push_back(nn::xavier_uniform(cfg.hidden, cfg.hidden, rng));
    p.edge_b.emplace_back(1, cfg.hidden);
  }
  p.gru = nn::GruParams::init(cfg.hidden, cfg.hidden, rng);
  p.head_w = nn::xavier_uniform(2, cfg.hidden, rng);
  p.head_b = Tensor(1, 2);
  return p;
}

nn::ParamRefs GgnnParams::params() {
  nn::ParamRefs refs;
  for (std::size_t k = 0; k < edge_w.size(); ++k) {
    refs.emplace_back("edge_w" + std::to_string(k), &edge_w[k]);
    refs.emplace_back("edge_b" + std::to_string(k), &edge_b[k]);
  }
  for (auto& [name, t] : gru.params()) refs.emplace_back("gru_" + name, t);
  refs.emplace_back("head_w", &head_w);
  refs.emplace_back("head_b", &head_b);
  return refs;
}

std::vector<VertexFeature> featurize_graph(const CodeGraph& g, const TokenEmbedding& emb,
                                           const TypeVocabulary& vertex_types) {
  std::vector<VertexFeature> feats(g.vertices.size());
  for (const auto& v : g.vertices)
    feats[static_cast<std::size_t>(v.id)] = featurize_vertex(v, emb, vertex_types);
  return feats;
}

nn::Tensor initial_states(const std::vector<VertexFeature>& feats, int hidden) {
  Tensor x(static_cast<int>(feats.size()), hidden);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& f = feats[i].values;
    if (static_cast<int>(f.size()) > hidden)
      throw std::invalid_argument("ggnn: feature length exceeds hidden size");
    std::copy(f.begin(), f.end(), x.data.begin() + static_cast<std::ptrdiff_t>(i) * hidden);
  }
  return x;
}

namespace {

// (transform index, src, dst) triples, with reverse edges folded in.
std::vector<std::array<int, 3>> message_edges(const CodeGraph& g, const GgnnParams& p) {
  std::vector<std::array<int, 3>> out;
  out.reserve(g.edges.size() * (p.reverse_edges ? 2 : 1));
  TypeVocabulary vocab{p.edge_types};
  for (const auto& e : g.edges) {
    const int k = vocab.index_of(e.etype);
    if (k < 0) throw std::invalid_argument("ggnn: unknown edge type \"" + e.etype + "\"");
    const int t = p.transform_index(k);
    out.push_back({t, e.src, e.dst});
    if (p.reverse_edges) out.push_back({t, e.dst, e.src});
  }
  return out;
}

}  // namespace

nn::Tensor propagate(const CodeGraph& g, const std::vector<VertexFeature>& feats,
                     const GgnnParams& p, int steps) {
  if (feats.size() != g.vertices.size())
    throw std::invalid_argument("propagate: features not aligned with vertices");
  if (steps < 0) throw std::invalid_argument("propagate: steps must be non-negative");
  const int hidden = p.hidden();
  const int n = static_cast<int>(g.vertices.size());
  Tensor x = initial_states(feats, hidden);
  if (n == 0 || steps == 0) return x;

  const auto edges = message_edges(g, p);
  Tensor transformed(n, hidden);
  for (int s = 0; s < steps; ++s) {
    Tensor messages(n, hidden);
    for (std::size_t t = 0; t < p.edge_w.size(); ++t) {
      bool used = false;
      for (const auto& e : edges)
        if (e[0] == static_cast<int>(t)) {
          used = true;
          break;
        }
      if (!used) continue;
      std::fill(transformed.data.begin(), transformed.data.end(), 0.0);
      nn::detail::gemm_nt(x.data.data(), p.edge_w[t].data.data(), transformed.data.data(), n,
                          hidden, hidden);
      for (const auto& e : edges) {
        if (e[0] != static_cast<int>(t)) continue;
        const double* src = transformed.data.data() + static_cast<std::size_t>(e[1]) * hidden;
        const double* bias = p.edge_b[t].data.data();
        double* dst = messages.data.data() + static_cast<std::size_t>(e[2]) * hidden;
        for (int d = 0; d < hidden; ++d) dst[d] += src[d] + bias[d];
      }
    }
    x = gru_forward(p.gru, x, messages);
  }
  if (!x.all_finite()) throw std::runtime_error("propagate: non-finite vertex state");
  return x;
}

std::vector<double> graph_embed(const nn::Tensor& states) {
  if (states.rows == 0) throw std::invalid_argument("empty graph");
  std::vector<double> out(static_cast<std::size_t>(states.cols), 0.0);
  for (int i = 0; i < states.rows; ++i)
    for (int j = 0; j < states.cols; ++j) out[static_cast<std::size_t>(j)] += states.at(i, j);
  return out;
}

namespace {

struct PreppedGraph {
  Tensor x0;
  std::vector<Tensor> adj;                  // per transform, [V x V], A[dst][src] counts
  std::vector<std::vector<double>> indeg;   // per transform, incoming edge counts
  std::vector<std::size_t> present;         // transforms with at least one edge
  int label = 0;
};

PreppedGraph prep_graph(const CodeGraph& g, const TokenEmbedding& emb,
                        const TypeVocabulary& vertex_types, const GgnnParams& p) {
  PreppedGraph pg;
  pg.label = g.label;
  pg.x0 = initial_states(featurize_graph(g, emb, vertex_types), p.hidden());
  const int n = static_cast<int>(g.vertices.size());
  const std::size_t n_transforms = p.edge_w.size();
  pg.adj.assign(n_transforms, Tensor());
  pg.indeg.assign(n_transforms, {});
  for (const auto& e : message_edges(g, p)) {
    const auto t = static_cast<std::size_t>(e[0]);
    if (pg.adj[t].rows == 0) {
      pg.adj[t] = Tensor(n, n);
      pg.indeg[t].assign(static_cast<std::size_t>(n), 0.0);
      pg.present.push_back(t);
    }
    pg.adj[t].at(e[2], e[1]) += 1.0;
    pg.indeg[t][static_cast<std::size_t>(e[2])] += 1.0;
  }
  std::sort(pg.present.begin(), pg.present.end());
  return pg;
}

struct GgnnLeaves {
  std::vector<nn::Tape::Var> edge_w, edge_b;
  nn::GruVars gru;
  nn::Tape::Var head_w, head_b;
};

GgnnLeaves ggnn_leaves(nn::Tape& t, GgnnParams& p) {
  GgnnLeaves v;
  for (auto& w : p.edge_w) v.edge_w.push_back(t.leaf(w));
  for (auto& b : p.edge_b) v.edge_b.push_back(t.leaf(b));
  v.gru = nn::gru_leaves(t, p.gru);
  v.head_w = t.leaf(p.head_w);
  v.head_b = t.leaf(p.head_b);
  return v;
}

// Cross-entropy of the softmax head over one graph.
nn::Tape::Var graph_loss(nn::Tape& t, const GgnnLeaves& v, const PreppedGraph& pg, int steps) {
  nn::Tape::Var x = t.constant(pg.x0);
  const int n = pg.x0.rows;
  const int hidden = pg.x0.cols;
  for (int s = 0; s < steps; ++s) {
    nn::Tape::Var msg = -1;
    for (std::size_t ti : pg.present) {
      nn::Tape::Var mk = t.matmul(t.constant(pg.adj[ti]), t.matmul_nt(x, v.edge_w[ti]));
      mk = t.add_outer(mk, pg.indeg[ti], v.edge_b[ti]);
      msg = msg < 0 ? mk : t.add(msg, mk);
    }
    if (msg < 0) msg = t.constant(Tensor(n, hidden));
    x = nn::gru_step(t, v.gru, x, msg);
  }
  nn::Tape::Var xg = t.col_sum(x);
  nn::Tape::Var logits = t.add_rowvec(t.matmul_nt(xg, v.head_w), v.head_b);
  return t.softmax_ce(logits, {pg.label});
}

// Plain (tape-free) forward pass over a prepped graph.
Tensor infer_states(const PreppedGraph& pg, const GgnnParams& p, int steps) {
  Tensor states = pg.x0;
  const int n = pg.x0.rows;
  const int hidden = pg.x0.cols;
  Tensor transformed(n, hidden);
  for (int s = 0; s < steps; ++s) {
    Tensor messages(n, hidden);
    for (std::size_t ti : pg.present) {
      std::fill(transformed.data.begin(), transformed.data.end(), 0.0);
      nn::detail::gemm_nt(states.data.data(), p.edge_w[ti].data.data(), transformed.data.data(),
                          n, hidden, hidden);
      nn::detail::gemm_nn(pg.adj[ti].data.data(), transformed.data.data(), messages.data.data(),
                          n, n, hidden);
      for (int i = 0; i < n; ++i) {
        const double deg = pg.indeg[ti][static_cast<std::size_t>(i)];
        if (deg == 0.0) continue;
        double* row = messages.data.data() + static_cast<std::size_t>(i) * hidden;
        for (int d = 0; d < hidden; ++d) row[d] += deg * p.edge_b[ti].data[d];
      }
    }
    states = gru_forward(p.gru, states, messages);
  }
  return states;
}

double valid_f1(const std::vector<PreppedGraph>& valid, const GgnnParams& p, int steps) {
  std::vector<int> preds, labels;
  for (const auto& pg : valid) {
    const auto xg = graph_embed(infer_states(pg, p, steps));
    double logit0 = p.head_b.data[0], logit1 = p.head_b.data[1];
    for (int d = 0; d < p.head_w.cols; ++d) {
      logit0 += p.head_w.at(0, d) * xg[static_cast<std::size_t>(d)];
      logit1 += p.head_w.at(1, d) * xg[static_cast<std::size_t>(d)];
    }
    preds.push_back(logit1 > logit0 ? 1 : 0);
    labels.push_back(pg.label);
  }
  return compute_metrics(preds, labels).f1;
}

}  // namespace

nn::Tape::Var ggnn_loss_from_leaves(nn::Tape& t, const std::vector<nn::Tape::Var>& leaves,
                                    const GgnnParams& shape, const std::vector<CodeGraph>& graphs,
                                    const TokenEmbedding& emb, const TypeVocabulary& vertex_types,
                                    int steps) {
  if (graphs.empty()) throw std::invalid_argument("ggnn loss: no graphs");
  const std::size_t expected = shape.edge_w.size() * 2 + 9 + 2;
  if (leaves.size() != expected)
    throw std::invalid_argument("ggnn loss: wrong leaf count");
  GgnnLeaves lv;
  std::size_t at = 0;
  for (std::size_t k = 0; k < shape.edge_w.size(); ++k) {
    lv.edge_w.push_back(leaves[at++]);
    lv.edge_b.push_back(leaves[at++]);
  }
  lv.gru.Wz = leaves[at++];
  lv.gru.Wr = leaves[at++];
  lv.gru.Wh = leaves[at++];
  lv.gru.Uz = leaves[at++];
  lv.gru.Ur = leaves[at++];
  lv.gru.Uh = leaves[at++];
  lv.gru.bz = leaves[at++];
  lv.gru.br = leaves[at++];
  lv.gru.bh = leaves[at++];
  lv.head_w = leaves[at++];
  lv.head_b = leaves[at++];
  nn::Tape::Var sum = -1;
  for (const auto& g : graphs) {
    const PreppedGraph pg = prep_graph(g, emb, vertex_types, shape);
    nn::Tape::Var l = graph_loss(t, lv, pg, steps);
    sum = sum < 0 ? l : t.add(sum, l);
  }
  return t.affine(sum, 1.0 / static_cast<double>(graphs.size()), 0.0);
}

GgnnParams pretrain_ggnn(const std::vector<CodeGraph>& train, const std::vector<CodeGraph>& valid,
                         const TokenEmbedding& emb, const TypeVocabulary& vertex_types,
                         const TypeVocabulary& edge_types, const GgnnConfig& cfg,
                         GgnnTrainLog* log) {
  if (train.empty() || valid.empty())
    throw std::invalid_argument("pretrain_ggnn: empty train or valid split");
  bool has0 = false, has1 = false;
  for (const auto& g : train) (g.label == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw std::invalid_argument("pretrain_ggnn: single-class training set");

  const int input_dim = static_cast<int>(vertex_types.size()) + emb.dim;
  Rng rng(cfg.seed);
  GgnnParams params = GgnnParams::init(cfg, edge_types.names, input_dim, rng);

  std::vector<PreppedGraph> ptrain, pvalid;
  ptrain.reserve(train.size());
  pvalid.reserve(valid.size());
  for (const auto& g : train) ptrain.push_back(prep_graph(g, emb, vertex_types, params));
  for (const auto& g : valid) pvalid.push_back(prep_graph(g, emb, vertex_types, params));

  auto refs = params.params();
  std::vector<Tensor*> param_ptrs;
  for (auto& [name, t] : refs) param_ptrs.push_back(t);
  nn::AdamState opt = nn::AdamState::like(param_ptrs);
  nn::AdamConfig adam;
  adam.lr = cfg.lr;

  GgnnParams best = params;
  double best_f1 = -1.0;
  int best_epoch = -1;
  int since_best = 0;

  std::vector<std::size_t> order(ptrain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      nn::Tape tape;
      GgnnLeaves leaves = ggnn_leaves(tape, params);
      nn::Tape::Var sum = -1;
      for (std::size_t i = start; i < end; ++i) {
        nn::Tape::Var l = graph_loss(tape, leaves, ptrain[order[i]], cfg.steps);
        sum = sum < 0 ? l : tape.add(sum, l);
      }
      nn::Tape::Var loss = tape.affine(sum, 1.0 / static_cast<double>(end - start), 0.0);
      const double loss_value = tape.value(loss).data[0];
      if (!std::isfinite(loss_value)) throw std::runtime_error("pretrain_ggnn: non-finite loss");
      tape.backward(loss);

      // order must match GgnnParams::params(): interleaved w/b, GRU, head
      std::vector<nn::Tape::Var> leaf_order;
      for (std::size_t k = 0; k < leaves.edge_w.size(); ++k) {
        leaf_order.push_back(leaves.edge_w[k]);
        leaf_order.push_back(leaves.edge_b[k]);
      }
      for (auto v : {leaves.gru.Wz, leaves.gru.Wr, leaves.gru.Wh, leaves.gru.Uz, leaves.gru.Ur,
                     leaves.gru.Uh, leaves.gru.bz, leaves.gru.br, leaves.gru.bh})
        leaf_order.push_back(v);
      leaf_order.push_back(leaves.head_w);
      leaf_order.push_back(leaves.head_b);
      std::vector<const Tensor*> grads;
      for (auto v : leaf_order) grads.push_back(&tape.grad(v));
      nn::adam_step(param_ptrs, grads, opt, adam);
      epoch_loss += loss_value;
      ++batches;
    }

    const double f1 = valid_f1(pvalid, params, cfg.steps);
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

std::vector<FeatureRecord> extract_features(const std::vector<CodeGraph>& graphs,
                                            const TokenEmbedding& emb,
                                            const TypeVocabulary& vertex_types,
                                            const TypeVocabulary& edge_types,
                                            const GgnnParams& params) {
  (void)edge_types;
  std::vector<FeatureRecord> records;
  records.reserve(graphs.size());
  for (const auto& g : graphs) {
    const auto feats = featurize_graph(g, emb, vertex_types);
    const Tensor states = propagate(g, feats, params, params.steps);
    FeatureRecord r;
    r.id = g.id;
    r.label = g.label;
    r.project = g.project;
    r.features = graph_embed(states);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<FeatureRecord> extract_features_raw(const std::vector<CodeGraph>& graphs,
                                                const TokenEmbedding& emb,
                                                const TypeVocabulary& vertex_types) {
  std::vector<FeatureRecord> records;
  records.reserve(graphs.size());
  const std::size_t dim = vertex_types.size() + static_cast<std::size_t>(emb.dim);
  for (const auto& g : graphs) {
    if (g.vertices.empty()) throw std::invalid_argument("empty graph");
    FeatureRecord r;
    r.id = g.id;
    r.label = g.label;
    r.project = g.project;
    r.features.assign(dim, 0.0);
    for (const auto& v : g.vertices) {
      const auto f = featurize_vertex(v, emb, vertex_types);
      for (std::size_t d = 0; d < dim; ++d) r.features[d] += f.values[d];
    }
    records.push_back(std::move(r));
  }
  return records;
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

void save_ggnn(const GgnnParams& p, const nn::AdamState& opt, const std::string& path,
               const std::string& config_hash, std::uint64_t seed, double lr) {
  json params = json::object();
  auto& mut = const_cast<GgnnParams&>(p);
  for (auto& [name, t] : mut.params()) params[name] = tensor_to_json(*t);
  json jopt = json::object();
  if (!opt.empty()) {
    json jm = json::array(), jv = json::array();
    for (const auto& t : opt.m) jm.push_back(tensor_to_json(t));
    for (const auto& t : opt.v) jv.push_back(tensor_to_json(t));
    jopt = json{{"m", std::move(jm)}, {"v", std::move(jv)}, {"step", opt.step}};
  }
  json j{{"kind", "ggnn"},
         {"hidden", p.hidden()},
         {"steps", p.steps},
         {"edge_types", p.edge_types},
         {"input_dim", p.input_dim},
         {"shared_transform", p.shared_transform},
         {"reverse_edges", p.reverse_edges},
         {"lr", lr},
         {"params", std::move(params)},
         {"opt", std::move(jopt)},
         {"step", opt.step},
         {"seed", seed},
         {"config_hash", config_hash}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
}

GgnnParams load_ggnn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed JSON: " + e.what());
  }
  if (j.value("kind", std::string{}) != "ggnn")
    throw std::runtime_error(path + ": not a ggnn checkpoint");
  GgnnParams p;
  p.edge_types = j.at("edge_types").get<std::vector<std::string>>();
  p.input_dim = j.at("input_dim").get<int>();
  p.steps = j.at("steps").get<int>();
  p.shared_transform = j.value("shared_transform", false);
  p.reverse_edges = j.value("reverse_edges", false);
  const int hidden = j.at("hidden").get<int>();
  const std::size_t n_transforms = p.shared_transform ? 1 : p.edge_types.size();
  const json& params = j.at("params");
  for (std::size_t k = 0; k < n_transforms; ++k) {
    p.edge_w.push_back(tensor_from_json(params.at("edge_w" + std::to_string(k))));
    p.edge_b.push_back(tensor_from_json(params.at("edge_b" + std::to_string(k))));
  }
  p.gru = nn::GruParams::zeros(hidden, hidden);
  for (auto& [name, t] : p.gru.params()) *t = tensor_from_json(params.at("gru_" + name));
  p.head_w = tensor_from_json(params.at("head_w"));
  p.head_b = tensor_from_json(params.at("head_b"));
  return p;
}

}  // namespace reveal
