#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace reveal {

// Ordered symbol list; position defines the one-hot index.
struct TypeVocabulary {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  int index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name) >= 0; }
};

// Built-in vertex-type vocabulary (69 symbols, so one-hot(69) plus a
// 100-dim token vector gives the default 169-dim vertex feature).
const TypeVocabulary& default_vertex_types();

// Built-in edge-type vocabulary: AST, CFG, DFG, DEF_USE.
const TypeVocabulary& default_edge_types();

// Load {"vertex_types":[...],"edge_types":[...]} from a JSON file.
std::pair<TypeVocabulary, TypeVocabulary> load_vocabularies(const std::string& path);

struct Vertex {
  int id = 0;
  std::string vtype;
  std::string code;
};

struct Edge {
  int src = 0;
  int dst = 0;
  std::string etype;
};

// Function-level code property graph.
struct CodeGraph {
  std::string id;
  int label = 0;  // 1 = vulnerable, 0 = clean
  std::string project;
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
};

// Reads a JSON Lines file, one graph per line:
//   {"id":..,"label":0|1,"project":..,
//    "vertices":[{"id":0,"type":..,"code":..},...],
//    "edges":[{"src":0,"dst":1,"etype":..},...]}
// Validates ids (dense in [0,|V|)), edge endpoints, labels, and that every
// type symbol is in the given vocabulary. Errors name the offending line,
// symbol, or graph id.
std::vector<CodeGraph> load_graphs(const std::string& path,
                                   const TypeVocabulary& vertex_types,
                                   const TypeVocabulary& edge_types);
std::vector<CodeGraph> load_graphs(const std::string& path);

void save_graphs(const std::vector<CodeGraph>& graphs, const std::string& path);

// Splits code into concrete tokens: whitespace-separated, with C
// punctuation split off and two-character operators
// (== != <= >= -> ++ -- && || << >>) kept intact. String and character
// literals stay single tokens. Deterministic; empty input gives an
// empty list.
std::vector<std::string> tokenize(std::string_view code);

// Content fingerprint over the token streams and vertex types in id
// order; insensitive to whitespace inside code fields and to edge lists.
std::string graph_fingerprint(const CodeGraph& g);

// Same normalization applied to a bare code string.
std::string token_fingerprint(std::string_view code);

}  // namespace reveal
