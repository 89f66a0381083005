#include "reveal/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "reveal/hash.hpp"

namespace reveal {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) { return nlohmann::json(v).dump(); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not a number: \"" + v + "\"");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not an integer: \"" + v + "\"");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::uint64_t d = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not an integer: \"" + v + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw std::invalid_argument("config key " + key + ": not a boolean: \"" + v + "\"");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

void apply_config_kv(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  if (key == "paths.graphs") cfg.graphs_path = v;
  else if (key == "paths.features") cfg.features_path = v;
  else if (key == "paths.corpus") cfg.corpus_path = v;
  else if (key == "paths.vocab") cfg.vocab_path = v;
  else if (key == "paths.embedding") cfg.embedding_path = v;
  else if (key == "paths.out") cfg.out_dir = v;
  else if (key == "embed.window") cfg.embed.window = parse_int(key, v);
  else if (key == "embed.dim") cfg.embed.dim = parse_int(key, v);
  else if (key == "embed.epochs") cfg.embed.epochs = parse_int(key, v);
  else if (key == "embed.negatives") cfg.embed.negatives = parse_int(key, v);
  else if (key == "embed.lr") cfg.embed.lr = parse_double(key, v);
  else if (key == "ggnn.hidden") cfg.ggnn.hidden = parse_int(key, v);
  else if (key == "ggnn.steps") cfg.ggnn.steps = parse_int(key, v);
  else if (key == "ggnn.lr") cfg.ggnn.lr = parse_double(key, v);
  else if (key == "ggnn.max_epochs") cfg.ggnn.max_epochs = parse_int(key, v);
  else if (key == "ggnn.patience") cfg.ggnn.patience = parse_int(key, v);
  else if (key == "ggnn.batch") cfg.ggnn.batch = parse_int(key, v);
  else if (key == "ggnn.shared_transform") cfg.ggnn.shared_transform = parse_bool(key, v);
  else if (key == "ggnn.reverse_edges") cfg.ggnn.reverse_edges = parse_bool(key, v);
  else if (key == "smote.k") cfg.smote_k = parse_int(key, v);
  else if (key == "smote.factor") cfg.smote_factor = parse_double(key, v);
  else if (key == "repr.gamma") cfg.repr.gamma = parse_double(key, v);
  else if (key == "repr.alpha") cfg.repr.alpha = parse_double(key, v);
  else if (key == "repr.beta") cfg.repr.beta = parse_double(key, v);
  else if (key == "repr.lr") cfg.repr.lr = parse_double(key, v);
  else if (key == "repr.dropout") cfg.repr.dropout = parse_double(key, v);
  else if (key == "repr.max_epochs") cfg.repr.max_epochs = parse_int(key, v);
  else if (key == "repr.patience") cfg.repr.patience = parse_int(key, v);
  else if (key == "repr.batch") cfg.repr.batch = parse_int(key, v);
  else if (key == "repr.hidden") {
    cfg.repr.hidden.clear();
    for (const auto& item : parse_list(v)) cfg.repr.hidden.push_back(parse_int(key, item));
    if (cfg.repr.hidden.empty())
      throw std::invalid_argument("config key repr.hidden: needs at least one layer size");
  } else if (key == "repr.hinge") cfg.repr.hinge = parse_bool(key, v);
  else if (key == "split.train") cfg.split.train = parse_double(key, v);
  else if (key == "split.valid") cfg.split.valid = parse_double(key, v);
  else if (key == "split.test") cfg.split.test = parse_double(key, v);
  else if (key == "split.stratified") cfg.stratified = parse_bool(key, v);
  else if (key == "test.vulnerable_fraction") cfg.test_vulnerable_fraction = parse_double(key, v);
  else if (key == "runs") cfg.n_runs = parse_int(key, v);
  else if (key == "seed") cfg.seed = parse_u64(key, v);
  else if (key == "ablate.use_ggnn") cfg.use_ggnn = parse_bool(key, v);
  else if (key == "ablate.use_smote") cfg.use_smote = parse_bool(key, v);
  else if (key == "ablate.loss") {
    if (v == "triplet") cfg.loss = LossKind::kTriplet;
    else if (v == "nll") cfg.loss = LossKind::kNll;
    else throw std::invalid_argument("config key ablate.loss: expected triplet or nll, got \"" + v + "\"");
  } else if (key == "arms") {
    cfg.arms = parse_list(v);
    for (const auto& a : cfg.arms)
      if (a != "full" && a != "nll" && a != "no-smote" && a != "no-ggnn")
        throw std::invalid_argument("unknown experiment arm \"" + a + "\"");
    if (cfg.arms.empty()) throw std::invalid_argument("arms: needs at least one arm");
  } else {
    throw std::invalid_argument("unknown config key \"" + key + "\"");
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_at = line.find('#');
    if (hash_at != std::string::npos) line = line.substr(0, hash_at);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      apply_config_kv(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

std::string print_config(const RunConfig& cfg, bool with_provenance) {
  struct Line {
    std::string key, value, origin;
  };
  const std::string paper = "paper-table";
  const std::string local = "artifact-default";
  std::vector<Line> lines = {
      {"paths.graphs", cfg.graphs_path, local},
      {"paths.features", cfg.features_path, local},
      {"paths.corpus", cfg.corpus_path, local},
      {"paths.vocab", cfg.vocab_path, local},
      {"paths.embedding", cfg.embedding_path, local},
      {"paths.out", cfg.out_dir, local},
      {"embed.window", fmt(cfg.embed.window), paper},
      {"embed.dim", fmt(cfg.embed.dim), paper},
      {"embed.epochs", fmt(cfg.embed.epochs), local},
      {"embed.negatives", fmt(cfg.embed.negatives), local},
      {"embed.lr", fmt(cfg.embed.lr), local},
      {"ggnn.hidden", fmt(cfg.ggnn.hidden), paper},
      {"ggnn.steps", fmt(cfg.ggnn.steps), paper},
      {"ggnn.lr", fmt(cfg.ggnn.lr), paper},
      {"ggnn.max_epochs", fmt(cfg.ggnn.max_epochs), paper},
      {"ggnn.patience", fmt(cfg.ggnn.patience), paper},
      {"ggnn.batch", fmt(cfg.ggnn.batch), local},
      {"ggnn.shared_transform", fmt(cfg.ggnn.shared_transform), local},
      {"ggnn.reverse_edges", fmt(cfg.ggnn.reverse_edges), local},
      {"smote.k", fmt(cfg.smote_k), local},
      {"smote.factor", fmt(cfg.smote_factor), local},
      {"repr.gamma", fmt(cfg.repr.gamma), paper},
      {"repr.alpha", fmt(cfg.repr.alpha), paper},
      {"repr.beta", fmt(cfg.repr.beta), paper},
      {"repr.lr", fmt(cfg.repr.lr), paper},
      {"repr.dropout", fmt(cfg.repr.dropout), paper},
      {"repr.max_epochs", fmt(cfg.repr.max_epochs), paper},
      {"repr.patience", fmt(cfg.repr.patience), paper},
      {"repr.batch", fmt(cfg.repr.batch), local},
      {"repr.hidden", join_ints(cfg.repr.hidden), paper},
      {"repr.hinge", fmt(cfg.repr.hinge), local},
      {"split.train", fmt(cfg.split.train), local},
      {"split.valid", fmt(cfg.split.valid), local},
      {"split.test", fmt(cfg.split.test), local},
      {"split.stratified", fmt(cfg.stratified), local},
      {"test.vulnerable_fraction", fmt(cfg.test_vulnerable_fraction), local},
      {"runs", fmt(cfg.n_runs), paper},
      {"seed", fmt(cfg.seed), local},
      {"ablate.use_ggnn", fmt(cfg.use_ggnn), local},
      {"ablate.use_smote", fmt(cfg.use_smote), local},
      {"ablate.loss", cfg.loss == LossKind::kTriplet ? "triplet" : "nll", local},
  };
  {
    std::string arms;
    for (std::size_t i = 0; i < cfg.arms.size(); ++i) {
      if (i) arms += ",";
      arms += cfg.arms[i];
    }
    lines.push_back({"arms", arms, local});
  }
  std::string out;
  for (const auto& l : lines) {
    out += l.key;
    out += " = ";
    out += l.value;
    if (with_provenance) {
      const std::size_t pad = l.key.size() + 3 + l.value.size();
      out.append(pad < 44 ? 44 - pad : 1, ' ');
      out += "# " + l.origin;
    }
    out += '\n';
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  std::istringstream in(print_config(cfg, false));
  std::string line, canonical;
  while (std::getline(in, line)) {
    if (line.rfind("paths.", 0) == 0) continue;
    canonical += line;
    canonical += '\n';
  }
  return hex64(fnv1a(canonical));
}

}  // namespace reveal
