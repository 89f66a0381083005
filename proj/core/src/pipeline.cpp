#include "reveal/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "reveal/dataprep.hpp"
#include "reveal/ggnn.hpp"

namespace reveal {

using nlohmann::json;

ArmFlags resolve_arm(const RunConfig& cfg, const std::string& arm) {
  ArmFlags f{cfg.use_ggnn, cfg.use_smote, cfg.loss};
  if (arm == "full") return f;
  if (arm == "nll") {
    f.loss = LossKind::kNll;
    return f;
  }
  if (arm == "no-smote") {
    f.use_smote = false;
    return f;
  }
  if (arm == "no-ggnn") {
    f.use_ggnn = false;
    return f;
  }
  throw std::invalid_argument("unknown experiment arm \"" + arm + "\"");
}

namespace {

// Fixed stage offsets for per-run sub-seeds.
enum : std::uint64_t { kSeedSplit = 1, kSeedGgnn = 2, kSeedSmote = 3, kSeedRepr = 4, kSeedTest = 5 };

struct PipelineInputs {
  bool feature_mode = false;
  std::vector<CodeGraph> graphs;
  std::vector<FeatureRecord> records;
  TokenEmbedding embedding;
  TypeVocabulary vertex_types;
  TypeVocabulary edge_types;
};

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

}  // namespace

std::vector<FeatureRecord> smote_with_config(const RunConfig& cfg,
                                             const std::vector<FeatureRecord>& records,
                                             std::uint64_t seed) {
  std::size_t pos = 0, neg = 0;
  for (const auto& r : records) (r.label == 1 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw std::invalid_argument("single-class training split");
  const std::size_t minority = std::min(pos, neg);
  const std::size_t majority = std::max(pos, neg);
  std::size_t m = majority;
  if (cfg.smote_factor > 0.0) {
    const auto wanted =
        static_cast<std::size_t>(std::ceil(cfg.smote_factor * static_cast<double>(minority)));
    m = std::min(majority, wanted);
  }
  return smote(records, cfg.smote_k, static_cast<int>(m), seed);
}

std::pair<TypeVocabulary, TypeVocabulary> vocabularies_of(const RunConfig& cfg) {
  if (!cfg.vocab_path.empty()) return load_vocabularies(cfg.vocab_path);
  return {default_vertex_types(), default_edge_types()};
}

namespace {

RunMetrics run_one(const RunConfig& cfg, const PipelineInputs& in, const ArmFlags& flags,
                   std::uint64_t run_seed) {
  std::vector<FeatureRecord> train, valid, test;

  if (in.feature_mode) {
    auto parts = stage("split", [&] {
      return split_records(in.records, cfg.split, Rng::derive(run_seed, kSeedSplit),
                           cfg.stratified);
    });
    train = std::move(parts[0]);
    valid = std::move(parts[1]);
    test = std::move(parts[2]);
  } else {
    auto parts = stage("split", [&] {
      return stratified_split(
          in.graphs, cfg.split, Rng::derive(run_seed, kSeedSplit),
          [](const CodeGraph& g) { return g.label; }, cfg.stratified);
    });
    if (flags.use_ggnn) {
      GgnnConfig gcfg = cfg.ggnn;
      gcfg.seed = Rng::derive(run_seed, kSeedGgnn);
      GgnnParams params = stage("pretrain-ggnn", [&] {
        return pretrain_ggnn(parts[0], parts[1], in.embedding, in.vertex_types, in.edge_types,
                             gcfg);
      });
      train = stage("extract", [&] {
        return extract_features(parts[0], in.embedding, in.vertex_types, in.edge_types, params);
      });
      valid = extract_features(parts[1], in.embedding, in.vertex_types, in.edge_types, params);
      test = extract_features(parts[2], in.embedding, in.vertex_types, in.edge_types, params);
    } else {
      train = stage("extract", [&] {
        return extract_features_raw(parts[0], in.embedding, in.vertex_types);
      });
      valid = extract_features_raw(parts[1], in.embedding, in.vertex_types);
      test = extract_features_raw(parts[2], in.embedding, in.vertex_types);
    }
  }

  if (cfg.test_vulnerable_fraction > 0.0) {
    test = stage("inject-imbalance", [&] {
      return inject_imbalance(test, cfg.test_vulnerable_fraction, Rng::derive(run_seed, kSeedTest));
    });
  }

  if (flags.use_smote) {
    train =
        stage("smote", [&] { return smote_with_config(cfg, train, Rng::derive(run_seed, kSeedSmote)); });
  }

  TripletConfig rcfg = cfg.repr;
  rcfg.loss = flags.loss;
  rcfg.seed = Rng::derive(run_seed, kSeedRepr);
  const nn::MlpParams model = stage("train-repr", [&] { return train_repr(train, valid, rcfg); });

  return stage("evaluate", [&] {
    std::vector<int> preds, labels;
    for (const auto& p : predict(test, model)) {
      preds.push_back(p.pred);
      labels.push_back(p.label);
    }
    return compute_metrics(preds, labels);
  });
}

PipelineInputs load_inputs(const RunConfig& cfg) {
  PipelineInputs in;
  if (!cfg.features_path.empty()) {
    in.feature_mode = true;
    in.records = load_records(cfg.features_path);
    return in;
  }
  if (cfg.graphs_path.empty())
    throw std::runtime_error("config needs paths.graphs or paths.features");

  std::tie(in.vertex_types, in.edge_types) = vocabularies_of(cfg);

  in.graphs = load_graphs(cfg.graphs_path, in.vertex_types, in.edge_types);
  if (!cfg.embedding_path.empty() && std::filesystem::exists(cfg.embedding_path)) {
    in.embedding = load_embedding(cfg.embedding_path);
  } else {
    std::vector<std::vector<std::string>> corpus;
    if (!cfg.corpus_path.empty()) {
      std::ifstream cin(cfg.corpus_path);
      if (!cin) throw std::runtime_error("cannot open corpus file: " + cfg.corpus_path);
      std::string line;
      while (std::getline(cin, line)) {
        auto toks = tokenize(line);
        if (!toks.empty()) corpus.push_back(std::move(toks));
      }
    } else {
      corpus = corpus_from_graphs(in.graphs);
    }
    SkipgramConfig ecfg = cfg.embed;
    ecfg.seed = cfg.seed;
    in.embedding = train_skipgram(corpus, ecfg);
  }
  return in;
}

int thread_budget(int jobs) {
  int budget = static_cast<int>(std::thread::hardware_concurrency());
  if (budget < 1) budget = 1;
  if (const char* env = std::getenv("REVEALKIT_THREADS")) {
    try {
      budget = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw std::runtime_error("REVEALKIT_THREADS is not an integer");
    }
  }
  return std::min(budget, jobs);
}

void aggregate_and_compare(const RunConfig& cfg, ExperimentReport& report) {
  for (auto& arm : report.arms) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& r : arm.runs) {
      if (r.failed) continue;
      values["accuracy"].push_back(r.metrics.accuracy);
      values["precision"].push_back(r.metrics.precision);
      values["recall"].push_back(r.metrics.recall);
      values["f1"].push_back(r.metrics.f1);
    }
    for (auto& [name, vals] : values)
      if (!vals.empty()) arm.aggregates[name] = make_distribution(vals);
  }

  if (report.arms.size() < 2) return;
  std::map<std::string, std::vector<double>> f1_by_arm;
  for (const auto& arm : report.arms) {
    std::vector<double> f1s;
    for (const auto& r : arm.runs)
      if (!r.failed) f1s.push_back(r.metrics.f1);
    if (!f1s.empty()) f1_by_arm[arm.name] = std::move(f1s);
  }
  std::uint64_t pair_index = 0;
  for (auto a = f1_by_arm.begin(); a != f1_by_arm.end(); ++a) {
    for (auto b = std::next(a); b != f1_by_arm.end(); ++b) {
      const auto detail =
          compare_detail(a->second, b->second, Rng::derive(cfg.seed, 0xC0 + pair_index));
      ++pair_index;
      report.comparisons.push_back(
          {"f1", a->first, b->first, detail.p_value, detail.a12,
           detail.verdict == Verdict::kDistinct});
    }
  }
  if (f1_by_arm.size() > 1) report.ranking = scott_knott(f1_by_arm, Rng::derive(cfg.seed, 0x5c));
}

}  // namespace

ExperimentReport run_experiment(const RunConfig& cfg) {
  if (cfg.n_runs < 1) throw std::invalid_argument("runs must be positive");
  if (cfg.arms.empty()) throw std::invalid_argument("experiment needs at least one arm");

  ExperimentReport report;
  report.config_hash = config_hash(cfg);
  report.seed = cfg.seed;
  report.n_runs = cfg.n_runs;

  const PipelineInputs inputs = load_inputs(cfg);

  for (const auto& name : cfg.arms) {
    ArmResult arm;
    arm.name = name;
    arm.flags = resolve_arm(cfg, name);
    arm.runs.resize(static_cast<std::size_t>(cfg.n_runs));
    report.arms.push_back(std::move(arm));
  }

  struct Job {
    std::size_t arm;
    int run;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < report.arms.size(); ++a)
    for (int r = 0; r < cfg.n_runs; ++r) jobs.push_back({a, r});

  const int threads = thread_budget(static_cast<int>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job job = jobs[j];
      ArmRun& slot = report.arms[job.arm].runs[static_cast<std::size_t>(job.run)];
      slot.run = job.run;
      slot.seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(job.run));
      try {
        slot.metrics = run_one(cfg, inputs, report.arms[job.arm].flags, slot.seed);
      } catch (const std::exception& e) {
        slot.failed = true;
        slot.error = e.what();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  aggregate_and_compare(cfg, report);
  return report;
}

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

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json arms = json::array();
  for (const auto& arm : report.arms) {
    json runs = json::array();
    for (const auto& r : arm.runs) {
      json jr{{"run", r.run}, {"seed", r.seed}, {"failed", r.failed}};
      if (r.failed)
        jr["error"] = r.error;
      else
        jr["metrics"] = metrics_to_json(r.metrics);
      runs.push_back(std::move(jr));
    }
    json aggregates = json::object();
    for (const auto& [name, dist] : arm.aggregates)
      aggregates[name] = json{{"median", dist.median}, {"iqr", dist.iqr}, {"values", dist.values}};
    arms.push_back(json{{"name", arm.name},
                        {"use_ggnn", arm.flags.use_ggnn},
                        {"use_smote", arm.flags.use_smote},
                        {"loss", arm.flags.loss == LossKind::kTriplet ? "triplet" : "nll"},
                        {"runs", std::move(runs)},
                        {"aggregates", std::move(aggregates)}});
  }
  json comparisons = json::array();
  for (const auto& c : report.comparisons)
    comparisons.push_back(json{{"metric", c.metric},
                               {"a", c.a},
                               {"b", c.b},
                               {"p_value", c.p_value},
                               {"a12", c.a12},
                               {"distinct", c.distinct}});
  json ranking = json::array();
  for (const auto& r : report.ranking)
    ranking.push_back(
        json{{"rank", r.rank}, {"name", r.name}, {"median", r.median}, {"iqr", r.iqr}});
  json j{{"config_hash", report.config_hash},
         {"seed", report.seed},
         {"runs", report.n_runs},
         {"arms", std::move(arms)},
         {"comparisons", std::move(comparisons)},
         {"scott_knott", std::move(ranking)}};
  return j.dump(2) + "\n";
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out = "arm,run,status,accuracy,precision,recall,f1,tp,fp,tn,fn\n";
  for (const auto& arm : report.arms) {
    for (const auto& r : arm.runs) {
      out += arm.name;
      out += ",";
      out += std::to_string(r.run);
      out += ",";
      if (r.failed) {
        out += "failed,,,,,,,,\n";
        continue;
      }
      out += "ok,";
      out += json(r.metrics.accuracy).dump() + ",";
      out += json(r.metrics.precision).dump() + ",";
      out += json(r.metrics.recall).dump() + ",";
      out += json(r.metrics.f1).dump() + ",";
      out += std::to_string(r.metrics.tp) + ",";
      out += std::to_string(r.metrics.fp) + ",";
      out += std::to_string(r.metrics.tn) + ",";
      out += std::to_string(r.metrics.fn) + "\n";
    }
  }
  return out;
}

void write_meta(const std::string& artifact_path, const std::string& config_hash,
                std::uint64_t seed) {
  json j{{"config_hash", config_hash}, {"seed", seed}};
  std::ofstream out(artifact_path + ".meta.json");
  if (!out) throw std::runtime_error("cannot write metadata for " + artifact_path);
  out << j.dump() << '\n';
}

std::string read_meta_hash(const std::string& artifact_path) {
  std::ifstream in(artifact_path + ".meta.json");
  if (!in) return {};
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return {};
  }
  return j.value("config_hash", std::string{});
}

void write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace reveal
