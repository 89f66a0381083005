#include "reveal/graph.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "reveal/hash.hpp"

namespace reveal {

using nlohmann::json;

int TypeVocabulary::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

const TypeVocabulary& default_vertex_types() {
  // 69 CPG node kinds; one-hot(69) + token-vector(100) = 169-dim features.
  static const TypeVocabulary vocab{{
      "AdditiveExpression",
      "AndExpression",
      "Argument",
      "ArgumentList",
      "ArithmeticExpression",
      "ArrayIndexing",
      "AssignmentExpression",
      "BitAndExpression",
      "BlockCloser",
      "BlockStarter",
      "BreakStatement",
      "Callee",
      "CallExpression",
      "CallStatement",
      "CastExpression",
      "CastTarget",
      "ClassDef",
      "ClassDefStatement",
      "CompoundStatement",
      "Condition",
      "ConditionalExpression",
      "ContinueStatement",
      "Decl",
      "DeclStmt",
      "DoStatement",
      "ElseStatement",
      "EqualityExpression",
      "ExclusiveOrExpression",
      "Expression",
      "ExpressionStatement",
      "File",
      "ForInit",
      "ForStatement",
      "Function",
      "FunctionDef",
      "GotoStatement",
      "Identifier",
      "IdentifierDecl",
      "IdentifierDeclStatement",
      "IdentifierDeclType",
      "IfStatement",
      "IncDec",
      "IncDecOp",
      "InclusiveOrExpression",
      "InfiniteForNode",
      "InitializerList",
      "Label",
      "MemberAccess",
      "MultiplicativeExpression",
      "OrExpression",
      "Parameter",
      "ParameterList",
      "ParameterType",
      "PrimaryExpression",
      "PtrMemberAccess",
      "RelationalExpression",
      "ReturnStatement",
      "ReturnType",
      "ShiftExpression",
      "Sizeof",
      "SizeofExpr",
      "SizeofOperand",
      "Statement",
      "SwitchStatement",
      "Symbol",
      "UnaryExpression",
      "UnaryOp",
      "UnaryOperator",
      "WhileStatement",
  }};
  return vocab;
}

const TypeVocabulary& default_edge_types() {
  static const TypeVocabulary vocab{{"AST", "CFG", "DFG", "DEF_USE"}};
  return vocab;
}

std::pair<TypeVocabulary, TypeVocabulary> load_vocabularies(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed JSON: " + e.what());
  }
  TypeVocabulary vt, et;
  for (const auto& n : j.at("vertex_types")) vt.names.push_back(n.get<std::string>());
  for (const auto& n : j.at("edge_types")) et.names.push_back(n.get<std::string>());
  if (vt.names.empty() || et.names.empty())
    throw std::runtime_error(path + ": vocabularies must be non-empty");
  return {std::move(vt), std::move(et)};
}

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

// Two-character operators kept as single tokens.
bool is_two_char_op(char a, char b) {
  switch (a) {
    case '=': return b == '=';
    case '!': return b == '=';
    case '<': return b == '=' || b == '<';
    case '>': return b == '=' || b == '>';
    case '-': return b == '>' || b == '-';
    case '+': return b == '+';
    case '&': return b == '&';
    case '|': return b == '|';
    default: return false;
  }
}

std::size_t scan_quoted(std::string_view s, std::size_t i, char quote) {
  ++i;  // opening quote
  while (i < s.size()) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      i += 2;
      continue;
    }
    if (s[i] == quote) return i + 1;
    ++i;
  }
  return i;  // unterminated literal runs to the end
}

}  // namespace

std::vector<std::string> tokenize(std::string_view code) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const char c = code[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t end = scan_quoted(code, i, c);
      tokens.emplace_back(code.substr(i, end - i));
      i = end;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident_char(code[j])) ++j;
      tokens.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (is_digit(c)) {
      // numeric literal, including hex, decimal point, and exponent
      std::size_t j = i + 1;
      while (j < n) {
        char d = code[j];
        if (is_ident_char(d) || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && (code[j - 1] == 'e' || code[j - 1] == 'E' ||
                                              code[j - 1] == 'p' || code[j - 1] == 'P')) {
          ++j;
        } else {
          break;
        }
      }
      tokens.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (i + 1 < n && is_two_char_op(c, code[i + 1])) {
      tokens.emplace_back(code.substr(i, 2));
      i += 2;
      continue;
    }
    tokens.emplace_back(code.substr(i, 1));
    ++i;
  }
  return tokens;
}

namespace {

void append_token_stream(std::string& buf, std::string_view code) {
  for (const auto& t : tokenize(code)) {
    buf += t;
    buf += '\x1f';
  }
}

void validate_graph(const CodeGraph& g) {
  if (g.label != 0 && g.label != 1)
    throw std::runtime_error("graph " + g.id + ": label must be 0 or 1");
  const int n = static_cast<int>(g.vertices.size());
  std::vector<char> seen(g.vertices.size(), 0);
  for (const auto& v : g.vertices) {
    if (v.id < 0 || v.id >= n)
      throw std::runtime_error("graph " + g.id + ": vertex id " + std::to_string(v.id) +
                               " not dense in [0," + std::to_string(n) + ")");
    if (seen[v.id])
      throw std::runtime_error("graph " + g.id + ": duplicate vertex id " + std::to_string(v.id));
    seen[v.id] = 1;
  }
  for (const auto& e : g.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      throw std::runtime_error("dangling endpoint in graph " + g.id);
  }
}

CodeGraph parse_graph(const json& j, const TypeVocabulary& vertex_types,
                      const TypeVocabulary& edge_types) {
  CodeGraph g;
  g.id = j.at("id").get<std::string>();
  g.label = j.at("label").get<int>();
  g.project = j.value("project", std::string{});
  for (const auto& jv : j.at("vertices")) {
    Vertex v;
    v.id = jv.at("id").get<int>();
    v.vtype = jv.at("type").get<std::string>();
    v.code = jv.value("code", std::string{});
    if (!vertex_types.contains(v.vtype))
      throw std::runtime_error("graph " + g.id + ": unknown vertex type \"" + v.vtype + "\"");
    g.vertices.push_back(std::move(v));
  }
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.src = je.at("src").get<int>();
    e.dst = je.at("dst").get<int>();
    e.etype = je.at("etype").get<std::string>();
    if (!edge_types.contains(e.etype))
      throw std::runtime_error("graph " + g.id + ": unknown edge type \"" + e.etype + "\"");
    g.edges.push_back(std::move(e));
  }
  validate_graph(g);
  return g;
}

}  // namespace

std::vector<CodeGraph> load_graphs(const std::string& path, const TypeVocabulary& vertex_types,
                                   const TypeVocabulary& edge_types) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  std::vector<CodeGraph> graphs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed JSON line: " + e.what());
    }
    try {
      graphs.push_back(parse_graph(j, vertex_types, edge_types));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return graphs;
}

std::vector<CodeGraph> load_graphs(const std::string& path) {
  return load_graphs(path, default_vertex_types(), default_edge_types());
}

void save_graphs(const std::vector<CodeGraph>& graphs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  for (const auto& g : graphs) {
    json jv = json::array();
    for (const auto& v : g.vertices) jv.push_back({{"id", v.id}, {"type", v.vtype}, {"code", v.code}});
    json je = json::array();
    for (const auto& e : g.edges) je.push_back({{"src", e.src}, {"dst", e.dst}, {"etype", e.etype}});
    json j{{"id", g.id}, {"label", g.label}, {"project", g.project},
           {"vertices", std::move(jv)}, {"edges", std::move(je)}};
    out << j.dump() << '\n';
  }
}

std::string graph_fingerprint(const CodeGraph& g) {
  // vertices in id order, independent of storage order
  std::vector<const Vertex*> by_id(g.vertices.size(), nullptr);
  for (const auto& v : g.vertices) by_id[static_cast<std::size_t>(v.id)] = &v;
  std::string buf;
  for (const Vertex* v : by_id) {
    buf += v->vtype;
    buf += '\x1f';
    append_token_stream(buf, v->code);
    buf += '\x1e';
  }
  return hex64(fnv1a(buf));
}

std::string token_fingerprint(std::string_view code) {
  std::string buf;
  append_token_stream(buf, code);
  return hex64(fnv1a(buf));
}

}  // namespace reveal
