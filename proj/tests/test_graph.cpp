#include <doctest.h>

#include <set>

#include "reveal/graph.hpp"
#include "support.hpp"

using namespace reveal;
using testutil::TempDir;
using testutil::write_file;

namespace {

// Independent reference tokenizer: single explicit pass with no sharing
// with the production scanner.
std::vector<std::string> reference_tokenize(const std::string& s) {
  static const std::set<std::string> two_char = {"==", "!=", "<=", ">=", "->",
                                                 "++", "--", "&&", "||", "<<", ">>"};
  std::vector<std::string> out;
  std::size_t i = 0;
  auto word_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      ++i;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != c) j += (s[j] == '\\') ? 2 : 1;
      if (j < s.size()) ++j;
      out.push_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    if (word_char(c) && !(c >= '0' && c <= '9')) {
      std::size_t j = i;
      while (j < s.size() && word_char(s[j])) ++j;
      out.push_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    if (c >= '0' && c <= '9') {
      std::size_t j = i;
      while (j < s.size() &&
             (word_char(s[j]) || s[j] == '.' ||
              ((s[j] == '+' || s[j] == '-') && j > i &&
               (s[j - 1] == 'e' || s[j - 1] == 'E' || s[j - 1] == 'p' || s[j - 1] == 'P'))))
        ++j;
      out.push_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    if (i + 1 < s.size() && two_char.count(s.substr(i, 2))) {
      out.push_back(s.substr(i, 2));
      i += 2;
      continue;
    }
    out.push_back(s.substr(i, 1));
    ++i;
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

const char* kGraphLine =
    R"json({"id":"g1","label":1,"project":"demo","vertices":[{"id":0,"type":"CallStatement","code":"free(data)"},{"id":1,"type":"Identifier","code":"data"}],"edges":[{"src":0,"dst":1,"etype":"DFG"}]})json";

}  // namespace

TEST_CASE("default vocabularies carry the documented dimensions") {
  CHECK(default_vertex_types().size() == 69);
  CHECK(default_edge_types().size() == 4);
  CHECK(default_vertex_types().size() + 100 == 169);
  CHECK(default_edge_types().contains("DEF_USE"));
}

TEST_CASE("load_graphs reads the interchange format") {
  TempDir tmp("load");
  write_file(tmp.path("g.jsonl"), std::string(kGraphLine) + "\n");
  const auto graphs = load_graphs(tmp.path("g.jsonl"));
  REQUIRE(graphs.size() == 1);
  CHECK(graphs[0].id == "g1");
  CHECK(graphs[0].label == 1);
  CHECK(graphs[0].vertices.size() == 2);
  CHECK(graphs[0].edges.size() == 1);
  CHECK(graphs[0].vertices[0].vtype == "CallStatement");
}

TEST_CASE("load_graphs on an empty file gives an empty list") {
  TempDir tmp("empty");
  write_file(tmp.path("g.jsonl"), "");
  CHECK(load_graphs(tmp.path("g.jsonl")).empty());
}

TEST_CASE("load_graphs rejects dangling endpoints, naming the graph") {
  TempDir tmp("dangle");
  write_file(
      tmp.path("g.jsonl"),
      R"json({"id":"bad","label":0,"project":"p","vertices":[{"id":0,"type":"Identifier","code":"a"},{"id":1,"type":"Identifier","code":"b"}],"edges":[{"src":0,"dst":5,"etype":"AST"}]})json"
      "\n");
  CHECK_THROWS_WITH_AS(load_graphs(tmp.path("g.jsonl")), doctest::Contains("dangling endpoint in graph bad"),
                       std::runtime_error);
}

TEST_CASE("load_graphs names the line of malformed JSON") {
  TempDir tmp("malformed");
  write_file(tmp.path("g.jsonl"), std::string(kGraphLine) + "\n{not json\n");
  CHECK_THROWS_WITH_AS(load_graphs(tmp.path("g.jsonl")), doctest::Contains(":2:"),
                       std::runtime_error);
}

TEST_CASE("load_graphs rejects unknown type symbols by name") {
  TempDir tmp("vocab");
  write_file(
      tmp.path("g.jsonl"),
      R"json({"id":"g","label":0,"project":"p","vertices":[{"id":0,"type":"NotAThing","code":""}],"edges":[]})json"
      "\n");
  CHECK_THROWS_WITH_AS(load_graphs(tmp.path("g.jsonl")), doctest::Contains("NotAThing"),
                       std::runtime_error);
}

TEST_CASE("load_graphs rejects non-dense and duplicate vertex ids") {
  TempDir tmp("ids");
  write_file(
      tmp.path("g.jsonl"),
      R"json({"id":"g","label":0,"project":"p","vertices":[{"id":0,"type":"Identifier","code":""},{"id":0,"type":"Identifier","code":""}],"edges":[]})json"
      "\n");
  CHECK_THROWS_AS(load_graphs(tmp.path("g.jsonl")), std::runtime_error);
}

TEST_CASE("serialize/load round trip is stable") {
  TempDir tmp("roundtrip");
  write_file(tmp.path("g.jsonl"), std::string(kGraphLine) + "\n");
  const auto graphs = load_graphs(tmp.path("g.jsonl"));
  save_graphs(graphs, tmp.path("out.jsonl"));
  const auto again = load_graphs(tmp.path("out.jsonl"));
  REQUIRE(again.size() == graphs.size());
  CHECK(again[0].id == graphs[0].id);
  CHECK(again[0].vertices[1].code == graphs[0].vertices[1].code);
  CHECK(again[0].edges[0].etype == graphs[0].edges[0].etype);
  // a second save reproduces the first byte for byte
  save_graphs(again, tmp.path("out2.jsonl"));
  CHECK(testutil::read_file(tmp.path("out.jsonl")) == testutil::read_file(tmp.path("out2.jsonl")));
}

TEST_CASE("tokenize splits C punctuation and keeps two-char operators") {
  CHECK(tokenize("if (a==b) { }") ==
        std::vector<std::string>{"if", "(", "a", "==", "b", ")", "{", "}"});
  CHECK(tokenize("x->y++") == std::vector<std::string>{"x", "->", "y", "++"});
  CHECK(tokenize("free(data);") == std::vector<std::string>{"free", "(", "data", ")", ";"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a<<=b") == std::vector<std::string>{"a", "<<", "=", "b"});
}

TEST_CASE("tokenize agrees with the reference tokenizer on a snippet corpus") {
  const std::vector<std::string> snippets = {
      "free(data);",
      "if (a==b) { }",
      "x->y++",
      "for (int i = 0; i < n; ++i) sum += arr[i];",
      "while (p != NULL && p->next) p = p->next;",
      "return a >= b ? a : b;",
      "char *s = \"hello world\";",
      "int mask = x << 2 | y >> 3;",
      "if (!ok || err) goto fail;",
      "ptr = (struct node *)malloc(sizeof(struct node));",
      "a = b-- - --c;",
      "val += key == 'x' ? 1 : 0;",
      "printf(\"%d\\n\", count);",
      "double r = 1.5e-3 + x;",
      "flags &= ~(1u << bit);",
      "memcpy(dst, src, len);",
      "s[i] = s[j] != 0 ? s[j] : ' ';",
      "do { n /= 10; } while (n > 0);",
      "static const int table[4] = {1, 2, 3, 4};",
      "if (x <= y) swap(&x, &y);",
  };
  for (const auto& s : snippets) {
    CAPTURE(s);
    CHECK(tokenize(s) == reference_tokenize(s));
  }
}

TEST_CASE("tokenize is idempotent over its own joined output") {
  const std::vector<std::string> snippets = {
      "free ( data ) ;", "a==b&&c||d", "x  ->y \t ++", "\"str with space\" + 'c'",
      "n = 0x1f + 1.5e-3;"};
  for (const auto& s : snippets) {
    const auto once = tokenize(s);
    CHECK(tokenize(join(once)) == once);
  }
}

TEST_CASE("fingerprints ignore whitespace inside code") {
  auto a = testutil::chain_graph("a", 0, {"int x = 1;", "free(data)"});
  auto b = testutil::chain_graph("b", 0, {"int  x =\t1;", "free( data )"});
  CHECK(graph_fingerprint(a) == graph_fingerprint(b));
}

TEST_CASE("fingerprints differ on a changed identifier or vertex type") {
  auto a = testutil::chain_graph("a", 0, {"free(data)"});
  auto b = testutil::chain_graph("b", 0, {"free(info)"});
  CHECK(graph_fingerprint(a) != graph_fingerprint(b));
  auto c = testutil::chain_graph("c", 0, {"free(data)"}, "CallStatement");
  CHECK(graph_fingerprint(a) != graph_fingerprint(c));
}

TEST_CASE("fingerprint equality is an equivalence relation on fixtures") {
  std::vector<CodeGraph> graphs = {
      testutil::chain_graph("g0", 0, {"a = b;", "return a;"}),
      testutil::chain_graph("g1", 1, {"a =  b;", "return  a;"}),  // same tokens as g0
      testutil::chain_graph("g2", 0, {"a = c;", "return a;"}),
      testutil::chain_graph("g3", 0, {"a = b;", "return a;"}),
  };
  std::vector<std::string> fp;
  for (const auto& g : graphs) fp.push_back(graph_fingerprint(g));
  for (std::size_t i = 0; i < fp.size(); ++i) CHECK(fp[i] == fp[i]);
  CHECK(fp[0] == fp[1]);
  CHECK(fp[1] == fp[0]);
  CHECK(fp[0] == fp[3]);
  CHECK(fp[1] == fp[3]);  // transitivity across g0 == g1, g0 == g3
  CHECK(fp[0] != fp[2]);
}

TEST_CASE("token_fingerprint matches whitespace-normalized content") {
  CHECK(token_fingerprint("int f ( ) { }") == token_fingerprint("int f(){}"));
  CHECK(token_fingerprint("int f(){}") != token_fingerprint("int g(){}"));
}
