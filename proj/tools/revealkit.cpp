// Command-line front end for the vulnerability-prediction pipeline:
// data ingestion, token embedding, GGNN pretraining, feature extraction,
// representation training, evaluation, and seeded multi-run experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "reveal/config.hpp"
#include "reveal/hash.hpp"
#include "reveal/dataprep.hpp"
#include "reveal/ggnn.hpp"
#include "reveal/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reveal;

namespace {

json metrics_to_json(const RunMetrics& m) {
  return json{{"tp", m.tp},
              {"fp", m.fp},
              {"tn", m.tn},
              {"fn", m.fn},
              {"accuracy", m.accuracy},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"precision_undefined", m.precision_undefined},
              {"recall_undefined", m.recall_undefined},
              {"f1_undefined", m.f1_undefined}};
}

void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig make_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  return cfg;
}

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "configuration file (key = value lines)");
  sub->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
}

// --- ingest ---------------------------------------------------------------

int cmd_ingest(const CommonOpts& opts, const std::string& patches_path, const std::string& out_path,
               bool tangled_only, bool dedup_output) {
  RunConfig cfg = make_config(opts);
  auto patches = load_patches(patches_path);
  if (tangled_only) patches = tangled_filter(patches);
  std::vector<LabeledFunction> labeled;
  for (const auto& p : patches) {
    auto fns = label_patch(p);
    labeled.insert(labeled.end(), std::make_move_iterator(fns.begin()),
                   std::make_move_iterator(fns.end()));
  }
  double duplicate_fraction = 0.0;
  if (dedup_output) {
    auto r = dedup(labeled, [](const LabeledFunction& f) { return token_fingerprint(f.body); });
    duplicate_fraction = r.duplicate_fraction;
    labeled = std::move(r.unique);
  }
  save_labeled(labeled, out_path);
  write_meta(out_path, config_hash(cfg), cfg.seed);
  json summary{{"patches", patches.size()}, {"functions", labeled.size()}};
  if (dedup_output) summary["duplicate_fraction"] = duplicate_fraction;
  std::cout << summary.dump() << "\n";
  return 0;
}

// --- stats ----------------------------------------------------------------

std::string sniff_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    if (j.contains("vertices")) return "graphs";
    if (j.contains("body")) return "labeled";
    if (j.contains("features")) return "features";
    throw std::runtime_error(path + ": unrecognized dataset line");
  }
  return "empty";
}

int cmd_stats(const std::string& input, const std::string& out_path) {
  const std::string kind = sniff_kind(input);
  json out{{"kind", kind}, {"path", input}};
  std::size_t total = 0, vulnerable = 0;
  double duplicate_fraction = 0.0;
  std::map<std::string, std::size_t> per_project;

  if (kind == "graphs") {
    const auto graphs = load_graphs(input);
    total = graphs.size();
    for (const auto& g : graphs) {
      vulnerable += g.label == 1;
      if (!g.project.empty()) per_project[g.project] += 1;
    }
    duplicate_fraction = dedup(graphs, graph_fingerprint).duplicate_fraction;
  } else if (kind == "labeled") {
    const auto fns = load_labeled(input);
    total = fns.size();
    for (const auto& f : fns) vulnerable += f.label == 1;
    duplicate_fraction =
        dedup(fns, [](const LabeledFunction& f) { return token_fingerprint(f.body); })
            .duplicate_fraction;
  } else if (kind == "features") {
    const auto records = load_records(input);
    total = records.size();
    for (const auto& r : records) {
      vulnerable += r.label == 1;
      if (!r.project.empty()) per_project[r.project] += 1;
    }
    duplicate_fraction = dedup(records, [](const FeatureRecord& r) {
                           std::string buf;
                           buf.reserve(r.features.size() * sizeof(double));
                           for (double v : r.features)
                             buf.append(reinterpret_cast<const char*>(&v), sizeof(double));
                           return hex64(fnv1a(buf));
                         }).duplicate_fraction;
  }

  out["count"] = total;
  out["vulnerable"] = vulnerable;
  out["vulnerable_fraction"] =
      total == 0 ? 0.0 : static_cast<double>(vulnerable) / static_cast<double>(total);
  out["duplicate_fraction"] = duplicate_fraction;
  if (!per_project.empty()) out["per_project"] = per_project;
  if (!out_path.empty()) write_json_file(out_path, out);
  std::cout << out.dump() << "\n";
  return 0;
}

// --- train-embed ----------------------------------------------------------

int cmd_train_embed(const CommonOpts& opts, const std::string& graphs_path,
                    const std::string& corpus_path, const std::string& out_path) {
  RunConfig cfg = make_config(opts);
  std::vector<std::vector<std::string>> corpus;
  if (!corpus_path.empty()) {
    std::ifstream in(corpus_path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + corpus_path);
    std::string line;
    while (std::getline(in, line)) {
      auto toks = tokenize(line);
      if (!toks.empty()) corpus.push_back(std::move(toks));
    }
  } else if (!graphs_path.empty()) {
    corpus = corpus_from_graphs([&] {
      const auto [vt, et] = vocabularies_of(cfg);
      return load_graphs(graphs_path, vt, et);
    }());
  } else {
    throw std::runtime_error("train-embed needs --graphs or --corpus");
  }
  SkipgramConfig ecfg = cfg.embed;
  ecfg.seed = cfg.seed;
  SkipgramLog log;
  const TokenEmbedding emb = train_skipgram(corpus, ecfg, &log);
  save_embedding(emb, out_path, config_hash(cfg), cfg.seed);
  json summary{{"vocab", emb.vocab.size()},
               {"dim", emb.dim},
               {"epochs", log.epoch_mean_loss.size()},
               {"first_epoch_loss", log.epoch_mean_loss.front()},
               {"last_epoch_loss", log.epoch_mean_loss.back()}};
  std::cout << summary.dump() << "\n";
  return 0;
}

// --- pretrain-ggnn --------------------------------------------------------

int cmd_pretrain_ggnn(const CommonOpts& opts, const std::string& train_path,
                      const std::string& valid_path, const std::string& embedding_path,
                      const std::string& out_path, const std::string& log_path) {
  RunConfig cfg = make_config(opts);
  const auto [vt, et] = vocabularies_of(cfg);
  const auto train = load_graphs(train_path, vt, et);
  const auto valid = load_graphs(valid_path, vt, et);
  const TokenEmbedding emb = load_embedding(embedding_path);
  GgnnConfig gcfg = cfg.ggnn;
  gcfg.seed = cfg.seed;
  GgnnTrainLog log;
  const GgnnParams params = pretrain_ggnn(train, valid, emb, vt, et, gcfg, &log);
  save_ggnn(params, nn::AdamState{}, out_path, config_hash(cfg), cfg.seed, gcfg.lr);
  if (!log_path.empty()) {
    json epochs = json::array();
    for (const auto& e : log.epochs)
      epochs.push_back(json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_f1", e.valid_f1}});
    write_json_file(log_path, json{{"epochs", epochs},
                                   {"best_epoch", log.best_epoch},
                                   {"best_valid_f1", log.best_valid_f1}});
  }
  std::cout << json{{"epochs_run", log.epochs.size()}, {"best_valid_f1", log.best_valid_f1}}.dump()
            << "\n";
  return 0;
}

// --- extract ----------------------------------------------------------------

int cmd_extract(const CommonOpts& opts, const std::string& graphs_path,
                const std::string& embedding_path, const std::string& ggnn_path, bool raw,
                const std::string& out_path) {
  RunConfig cfg = make_config(opts);
  const auto [vt, et] = vocabularies_of(cfg);
  const auto graphs = load_graphs(graphs_path, vt, et);
  const TokenEmbedding emb = load_embedding(embedding_path);
  std::vector<FeatureRecord> records;
  if (raw) {
    records = extract_features_raw(graphs, emb, vt);
  } else {
    if (ggnn_path.empty()) throw std::runtime_error("extract needs --ggnn or --raw");
    const GgnnParams params = load_ggnn(ggnn_path);
    records = extract_features(graphs, emb, vt, et, params);
  }
  save_records(records, out_path);
  write_meta(out_path, config_hash(cfg), cfg.seed);
  std::cout << json{{"records", records.size()},
                    {"dim", records.empty() ? 0 : records[0].features.size()}}
                   .dump()
            << "\n";
  return 0;
}

// --- train-repr -------------------------------------------------------------

int cmd_train_repr(const CommonOpts& opts, const std::string& train_path,
                   const std::string& valid_path, const std::string& out_path,
                   const std::string& log_path, bool smote_flag, bool no_smote_flag,
                   const std::string& loss_name) {
  RunConfig cfg = make_config(opts);
  if (!loss_name.empty()) {
    if (loss_name == "triplet")
      cfg.loss = LossKind::kTriplet;
    else if (loss_name == "nll")
      cfg.loss = LossKind::kNll;
    else
      throw std::runtime_error("--loss must be triplet or nll");
  }
  bool use_smote = cfg.use_smote;
  if (smote_flag) use_smote = true;
  if (no_smote_flag) use_smote = false;

  auto train = load_records(train_path);
  const auto valid = load_records(valid_path);
  if (use_smote) train = smote_with_config(cfg, train, Rng::derive(cfg.seed, 3));

  TripletConfig rcfg = cfg.repr;
  rcfg.loss = cfg.loss;
  rcfg.seed = Rng::derive(cfg.seed, 4);
  ReprTrainLog log;
  const nn::MlpParams model = train_repr(train, valid, rcfg, &log);
  save_repr(model, nn::AdamState{}, out_path, config_hash(cfg), cfg.seed);
  if (!log_path.empty()) {
    json epochs = json::array();
    for (const auto& e : log.epochs)
      epochs.push_back(json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_f1", e.valid_f1}});
    write_json_file(log_path, json{{"epochs", epochs},
                                   {"best_epoch", log.best_epoch},
                                   {"best_valid_f1", log.best_valid_f1},
                                   {"smote", use_smote},
                                   {"train_records", train.size()}});
  }
  std::cout << json{{"epochs_run", log.epochs.size()}, {"best_valid_f1", log.best_valid_f1}}.dump()
            << "\n";
  return 0;
}

// --- evaluate ---------------------------------------------------------------

int cmd_evaluate(const std::string& features_path, const std::string& checkpoint_path,
                 const std::string& out_path, const std::string& preds_path, bool force) {
  // artifact compatibility gate
  std::string ckpt_hash;
  std::uint64_t ckpt_seed = 0;
  {
    std::ifstream in(checkpoint_path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + checkpoint_path);
    json j;
    in >> j;
    ckpt_hash = j.value("config_hash", std::string{});
    ckpt_seed = j.value("seed", std::uint64_t{0});
  }
  const std::string feat_hash = read_meta_hash(features_path);
  if (!force && !ckpt_hash.empty() && !feat_hash.empty() && ckpt_hash != feat_hash)
    throw std::runtime_error("config hash mismatch: features " + feat_hash + " vs checkpoint " +
                             ckpt_hash + " (use --force to override)");

  const auto records = load_records(features_path);
  const nn::MlpParams model = load_repr(checkpoint_path);
  const auto preds = predict(records, model);
  std::vector<int> p, y;
  for (const auto& pr : preds) {
    p.push_back(pr.pred);
    y.push_back(pr.label);
  }
  const RunMetrics m = compute_metrics(p, y);
  json out{{"metrics", metrics_to_json(m)},
           {"count", records.size()},
           {"config_hash", ckpt_hash},
           {"seed", ckpt_seed}};
  if (!out_path.empty()) write_json_file(out_path, out);
  if (!preds_path.empty()) {
    save_predictions(preds, preds_path);
    write_meta(preds_path, ckpt_hash, ckpt_seed);
  }
  std::cout << out["metrics"].dump() << "\n";
  return 0;
}

// --- experiment -------------------------------------------------------------

int cmd_experiment(const CommonOpts& opts, int runs, bool runs_set, const std::string& out_dir,
                   const std::string& ablate) {
  RunConfig cfg = make_config(opts);
  if (runs_set) cfg.n_runs = runs;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!ablate.empty()) {
    if (ablate == "ggnn")
      cfg.use_ggnn = false;
    else if (ablate == "smote")
      cfg.use_smote = false;
    else if (ablate == "loss")
      cfg.loss = LossKind::kNll;
    else
      throw std::runtime_error("--ablate must be ggnn, smote, or loss");
  }
  const ExperimentReport report = run_experiment(cfg);
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/report.json", report_to_json(report));
  write_text_file(cfg.out_dir + "/report.csv", report_to_csv(report));
  write_text_file(cfg.out_dir + "/config.txt", print_config(cfg, true));

  json summary{{"config_hash", report.config_hash}, {"out", cfg.out_dir}};
  for (const auto& arm : report.arms) {
    const auto it = arm.aggregates.find("f1");
    if (it != arm.aggregates.end())
      summary["f1"][arm.name] = json{{"median", it->second.median}, {"iqr", it->second.iqr}};
    std::size_t failures = 0;
    for (const auto& r : arm.runs) failures += r.failed;
    if (failures) summary["failures"][arm.name] = failures;
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulnerability prediction over code property graphs: GGNN features, SMOTE rebalancing, triplet-loss representation learning"};
  app.require_subcommand(0, 1);

  bool print_config_flag = false;
  app.add_flag("--print-config", print_config_flag,
               "print the effective configuration with provenance markers and exit");
  std::string root_config;
  app.add_option("--config", root_config, "configuration file for --print-config");

  CommonOpts ingest_o, embed_o, ggnn_o, extract_o, repr_o, exp_o;

  auto* ingest = app.add_subcommand("ingest", "label patch records into a function dataset");
  std::string ingest_patches, ingest_out;
  bool ingest_tangled = false, ingest_dedup = false;
  ingest->add_option("--patches", ingest_patches, "patch JSONL")->required();
  ingest->add_option("--out", ingest_out, "labeled-function JSONL")->required();
  ingest->add_flag("--tangled-only", ingest_tangled, "keep only single-function patches");
  ingest->add_flag("--dedup", ingest_dedup, "drop token-identical duplicates");
  add_common(ingest, ingest_o);

  auto* stats = app.add_subcommand("stats", "class balance and duplicate fraction of a dataset");
  std::string stats_input, stats_out;
  stats->add_option("--input", stats_input, "graphs/labeled/features JSONL")->required();
  stats->add_option("--out", stats_out, "write the stats JSON here too");

  auto* tembed = app.add_subcommand("train-embed", "train the skip-gram token embedding");
  std::string te_graphs, te_corpus, te_out;
  tembed->add_option("--graphs", te_graphs, "graph JSONL corpus");
  tembed->add_option("--corpus", te_corpus, "plain-text corpus, one sentence per line");
  tembed->add_option("--out", te_out, "embedding checkpoint")->required();
  add_common(tembed, embed_o);

  auto* tggnn = app.add_subcommand("pretrain-ggnn", "pretrain the graph network with a class head");
  std::string tg_train, tg_valid, tg_emb, tg_out, tg_log;
  tggnn->add_option("--train", tg_train, "training graphs JSONL")->required();
  tggnn->add_option("--valid", tg_valid, "validation graphs JSONL")->required();
  tggnn->add_option("--embedding", tg_emb, "embedding checkpoint")->required();
  tggnn->add_option("--out", tg_out, "GGNN checkpoint")->required();
  tggnn->add_option("--log", tg_log, "training log JSON");
  add_common(tggnn, ggnn_o);

  auto* extract = app.add_subcommand("extract", "graph embeddings -> feature records");
  std::string ex_graphs, ex_emb, ex_ggnn, ex_out;
  bool ex_raw = false;
  extract->add_option("--graphs", ex_graphs, "graphs JSONL")->required();
  extract->add_option("--embedding", ex_emb, "embedding checkpoint")->required();
  extract->add_option("--ggnn", ex_ggnn, "GGNN checkpoint");
  extract->add_flag("--raw", ex_raw, "skip message passing; sum raw vertex features");
  extract->add_option("--out", ex_out, "feature JSONL")->required();
  add_common(extract, extract_o);

  auto* trepr = app.add_subcommand("train-repr", "train the representation learner");
  std::string tr_train, tr_valid, tr_out, tr_log, tr_loss;
  bool tr_smote = false, tr_no_smote = false;
  trepr->add_option("--train", tr_train, "training features JSONL")->required();
  trepr->add_option("--valid", tr_valid, "validation features JSONL")->required();
  trepr->add_option("--out", tr_out, "representation checkpoint")->required();
  trepr->add_option("--log", tr_log, "training log JSON");
  trepr->add_option("--loss", tr_loss, "triplet | nll");
  trepr->add_flag("--smote", tr_smote, "rebalance the training split first");
  trepr->add_flag("--no-smote", tr_no_smote, "train on the raw split");
  add_common(trepr, repr_o);

  auto* eval = app.add_subcommand("evaluate", "score a feature set against a checkpoint");
  std::string ev_features, ev_ckpt, ev_out, ev_preds;
  bool ev_force = false;
  eval->add_option("--features", ev_features, "feature JSONL")->required();
  eval->add_option("--checkpoint", ev_ckpt, "representation checkpoint")->required();
  eval->add_option("--out", ev_out, "metrics JSON");
  eval->add_option("--preds", ev_preds, "prediction JSONL");
  eval->add_flag("--force", ev_force, "ignore config-hash mismatches");

  auto* exper = app.add_subcommand("experiment", "seeded multi-run experiment with ablation arms");
  int xp_runs = 0;
  bool xp_runs_set = false;
  std::string xp_out, xp_ablate;
  exper->add_option("--runs", xp_runs, "number of runs")->each([&](const std::string&) {
    xp_runs_set = true;
  });
  exper->add_option("--out", xp_out, "output directory");
  exper->add_option("--ablate", xp_ablate, "ggnn | smote | loss");
  add_common(exper, exp_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n" << e.what() << "\n";
    return 2;
  }

  try {
    if (print_config_flag) {
      RunConfig cfg = root_config.empty() ? RunConfig{} : load_config(root_config);
      std::cout << print_config(cfg, true);
      return 0;
    }
    if (ingest->parsed())
      return cmd_ingest(ingest_o, ingest_patches, ingest_out, ingest_tangled, ingest_dedup);
    if (stats->parsed()) return cmd_stats(stats_input, stats_out);
    if (tembed->parsed()) return cmd_train_embed(embed_o, te_graphs, te_corpus, te_out);
    if (tggnn->parsed())
      return cmd_pretrain_ggnn(ggnn_o, tg_train, tg_valid, tg_emb, tg_out, tg_log);
    if (extract->parsed())
      return cmd_extract(extract_o, ex_graphs, ex_emb, ex_ggnn, ex_raw, ex_out);
    if (trepr->parsed())
      return cmd_train_repr(repr_o, tr_train, tr_valid, tr_out, tr_log, tr_smote, tr_no_smote,
                            tr_loss);
    if (eval->parsed()) return cmd_evaluate(ev_features, ev_ckpt, ev_out, ev_preds, ev_force);
    if (exper->parsed()) return cmd_experiment(exp_o, xp_runs, xp_runs_set, xp_out, xp_ablate);
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}
