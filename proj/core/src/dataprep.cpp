#include "reveal/dataprep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "reveal/graph.hpp"

namespace reveal {

using nlohmann::json;

std::vector<LabeledFunction> label_patch(const PatchRecord& p) {
  auto find_in = [](const std::vector<std::pair<std::string, std::string>>& side,
                    const std::string& name) -> const std::string* {
    for (const auto& [n, body] : side)
      if (n == name) return &body;
    return nullptr;
  };

  std::unordered_set<std::string> changed(p.changed.begin(), p.changed.end());
  std::vector<LabeledFunction> out;

  for (const auto& name : p.changed) {
    const std::string* before = find_in(p.before, name);
    const std::string* after = find_in(p.after, name);
    if (!before && !after)
      throw std::invalid_argument("patch " + p.patch_id + ": changed function \"" + name +
                                  "\" absent from both sides");
    if (before)
      out.push_back({p.patch_id + "::" + name + "@before", *before, 1, "before-changed", p.patch_id});
    if (after)
      out.push_back({p.patch_id + "::" + name + "@after", *after, 0, "after-changed", p.patch_id});
  }

  // untouched functions once each, preferring the post-patch copy
  std::unordered_set<std::string> emitted;
  for (const auto& [name, body] : p.after) {
    if (changed.count(name) || !emitted.insert(name).second) continue;
    out.push_back({p.patch_id + "::" + name, body, 0, "unchanged", p.patch_id});
  }
  for (const auto& [name, body] : p.before) {
    if (changed.count(name) || !emitted.insert(name).second) continue;
    out.push_back({p.patch_id + "::" + name, body, 0, "unchanged", p.patch_id});
  }
  return out;
}

std::vector<PatchRecord> tangled_filter(const std::vector<PatchRecord>& patches) {
  std::vector<PatchRecord> out;
  for (const auto& p : patches)
    if (p.changed.size() == 1) out.push_back(p);
  return out;
}

namespace {

// Cursor over C-like text that steps across comments, string/char
// literals, and preprocessor lines while tracking the line number.
struct SourceCursor {
  const std::string& src;
  std::size_t pos = 0;
  long line = 1;

  explicit SourceCursor(const std::string& s) : src(s) {}

  bool done() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }

  void bump() {
    if (src[pos] == '\n') ++line;
    ++pos;
  }

  bool at_line_start() const {
    std::size_t i = pos;
    while (i > 0) {
      const char c = src[i - 1];
      if (c == '\n') return true;
      if (c != ' ' && c != '\t') return false;
      --i;
    }
    return true;
  }

  // Skips whitespace, comments, and preprocessor directives. Returns
  // false at end of input.
  bool skip_insignificant() {
    while (!done()) {
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
        while (!done() && peek() != '\n') bump();
      } else if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '*') {
        bump();
        bump();
        while (!done() && !(peek() == '*' && pos + 1 < src.size() && src[pos + 1] == '/')) bump();
        if (!done()) {
          bump();
          bump();
        }
      } else if (c == '#' && at_line_start()) {
        while (!done()) {
          if (peek() == '\\' && pos + 1 < src.size() && src[pos + 1] == '\n') {
            bump();
            bump();
            continue;
          }
          if (peek() == '\n') break;
          bump();
        }
      } else {
        return true;
      }
    }
    return false;
  }

  void skip_quoted(char quote) {
    bump();  // opening quote
    while (!done()) {
      if (peek() == '\\' && pos + 1 < src.size()) {
        bump();
        bump();
        continue;
      }
      if (peek() == quote) {
        bump();
        return;
      }
      bump();
    }
  }
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<std::pair<std::string, std::string>> extract_functions(const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  SourceCursor cur(source);

  long depth = 0;
  std::string last_ident;
  bool prev_was_ident = false;
  if (!cur.skip_insignificant()) return out;
  std::size_t stmt_start = cur.pos;

  auto begin_statement = [&] {
    if (cur.skip_insignificant()) stmt_start = cur.pos;
    last_ident.clear();
    prev_was_ident = false;
  };

  while (cur.skip_insignificant()) {
    const char c = cur.peek();

    if (c == '"' || c == '\'') {
      cur.skip_quoted(c);
      prev_was_ident = false;
      continue;
    }
    if (ident_start(c)) {
      std::string ident;
      while (!cur.done() && ident_char(cur.peek())) {
        ident += cur.peek();
        cur.bump();
      }
      if (depth == 0) {
        last_ident = std::move(ident);
        prev_was_ident = true;
      }
      continue;
    }
    if (c == '(' && depth == 0 && prev_was_ident && !last_ident.empty()) {
      // parameter list: scan to the matching ')'
      long parens = 0;
      while (cur.skip_insignificant()) {
        const char pc = cur.peek();
        if (pc == '"' || pc == '\'') {
          cur.skip_quoted(pc);
          continue;
        }
        cur.bump();
        if (pc == '(') ++parens;
        if (pc == ')' && --parens == 0) break;
      }
      if (!cur.skip_insignificant()) break;
      if (cur.peek() == '{') {
        const long body_line = cur.line;
        cur.bump();
        long body_depth = 1;
        while (body_depth > 0 && cur.skip_insignificant()) {
          const char bc = cur.peek();
          if (bc == '"' || bc == '\'') {
            cur.skip_quoted(bc);
            continue;
          }
          cur.bump();
          if (bc == '{') ++body_depth;
          if (bc == '}') --body_depth;
        }
        if (body_depth > 0)
          throw std::runtime_error("unbalanced braces in function starting at line " +
                                   std::to_string(body_line));
        out.emplace_back(last_ident, source.substr(stmt_start, cur.pos - stmt_start));
        begin_statement();
      } else {
        prev_was_ident = false;  // declaration or macro-like use, keep scanning
      }
      continue;
    }

    cur.bump();
    prev_was_ident = false;
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
      if (depth < 0)
        throw std::runtime_error("unbalanced '}' at line " + std::to_string(cur.line));
      if (depth == 0) begin_statement();
    } else if (c == ';' && depth == 0) {
      begin_statement();
    }
  }
  if (depth != 0)
    throw std::runtime_error("unbalanced braces at end of input (line " +
                             std::to_string(cur.line) + ")");
  return out;
}

std::vector<FeatureRecord> inject_imbalance(const std::vector<FeatureRecord>& test,
                                            double vulnerable_fraction, std::uint64_t seed) {
  if (vulnerable_fraction <= 0.0)
    throw std::invalid_argument("inject_imbalance: target fraction must be positive");
  std::vector<std::size_t> vul;
  std::size_t clean = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (test[i].label == 1)
      vul.push_back(i);
    else
      ++clean;
  if (test.empty()) throw std::invalid_argument("inject_imbalance: empty input");
  const double current = static_cast<double>(vul.size()) / static_cast<double>(test.size());
  if (vulnerable_fraction > current + 1e-12)
    throw std::invalid_argument("inject_imbalance: target fraction " +
                                std::to_string(vulnerable_fraction) + " above current " +
                                std::to_string(current));

  // keep k vulnerable so that k / (k + clean) lands nearest the target
  const double ideal =
      vulnerable_fraction * static_cast<double>(clean) / (1.0 - vulnerable_fraction);
  auto keep = static_cast<std::size_t>(std::llround(ideal));
  keep = std::min(keep, vul.size());

  Rng rng(seed);
  std::vector<std::size_t> pool = vul;
  std::vector<char> drop(test.size(), 0);
  while (pool.size() > keep) {
    const std::size_t at = rng.index(pool.size());
    drop[pool[at]] = 1;
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
  }
  std::vector<FeatureRecord> out;
  out.reserve(test.size() - (vul.size() - keep));
  for (std::size_t i = 0; i < test.size(); ++i)
    if (!drop[i]) out.push_back(test[i]);
  return out;
}

std::array<std::vector<FeatureRecord>, 3> split_records(const std::vector<FeatureRecord>& records,
                                                        const SplitFractions& f,
                                                        std::uint64_t seed, bool stratified) {
  return stratified_split(records, f, seed, [](const FeatureRecord& r) { return r.label; },
                          stratified);
}

std::vector<PatchRecord> load_patches(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open patch file: " + path);
  std::vector<PatchRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      PatchRecord p;
      p.patch_id = j.at("patch_id").get<std::string>();
      p.project = j.value("project", std::string{});
      auto read_side = [&](const char* list_key, const char* source_key,
                           std::vector<std::pair<std::string, std::string>>& side) {
        if (j.contains(list_key)) {
          for (const auto& jf : j.at(list_key))
            side.emplace_back(jf.at("name").get<std::string>(), jf.at("body").get<std::string>());
        } else if (j.contains(source_key)) {
          side = extract_functions(j.at(source_key).get<std::string>());
        } else {
          throw std::runtime_error(std::string("patch needs \"") + list_key + "\" or \"" +
                                   source_key + "\"");
        }
      };
      read_side("before", "before_source", p.before);
      read_side("after", "after_source", p.after);
      if (j.contains("changed")) {
        p.changed = j.at("changed").get<std::vector<std::string>>();
      } else {
        // whole-file convenience input: changed = bodies that differ
        std::map<std::string, std::string> before_fp, after_fp;
        for (const auto& [n, b] : p.before) before_fp.emplace(n, token_fingerprint(b));
        for (const auto& [n, b] : p.after) after_fp.emplace(n, token_fingerprint(b));
        for (const auto& [n, fp] : before_fp) {
          auto it = after_fp.find(n);
          if (it == after_fp.end() || it->second != fp) p.changed.push_back(n);
        }
        for (const auto& [n, fp] : after_fp)
          if (!before_fp.count(n)) p.changed.push_back(n);
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_patches(const std::vector<PatchRecord>& patches, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write patch file: " + path);
  for (const auto& p : patches) {
    json jb = json::array(), ja = json::array();
    for (const auto& [n, b] : p.before) jb.push_back({{"name", n}, {"body", b}});
    for (const auto& [n, b] : p.after) ja.push_back({{"name", n}, {"body", b}});
    json j{{"patch_id", p.patch_id},
           {"project", p.project},
           {"before", std::move(jb)},
           {"after", std::move(ja)},
           {"changed", p.changed}};
    out << j.dump() << '\n';
  }
}

std::vector<LabeledFunction> load_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labeled dataset: " + path);
  std::vector<LabeledFunction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      LabeledFunction f;
      f.id = j.at("id").get<std::string>();
      f.body = j.at("body").get<std::string>();
      f.label = j.at("label").get<int>();
      f.origin = j.value("origin", std::string{});
      f.patch_id = j.value("patch_id", std::string{});
      out.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_labeled(const std::vector<LabeledFunction>& functions, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write labeled dataset: " + path);
  for (const auto& f : functions) {
    json j{{"id", f.id},
           {"body", f.body},
           {"label", f.label},
           {"origin", f.origin},
           {"patch_id", f.patch_id}};
    out << j.dump() << '\n';
  }
}

}  // namespace reveal
