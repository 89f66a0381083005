#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>

#include "reveal/graph.hpp"
#include "reveal/sampling.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> serial{0};
    dir_ = std::filesystem::temp_directory_path() /
           ("revealkit_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(serial.fetch_add(1)));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Small graph with linear AST edges over the given code fragments.
inline reveal::CodeGraph chain_graph(const std::string& id, int label,
                                     const std::vector<std::string>& codes,
                                     const std::string& vtype = "ExpressionStatement",
                                     const std::string& etype = "AST") {
  reveal::CodeGraph g;
  g.id = id;
  g.label = label;
  g.project = "fixture";
  for (std::size_t i = 0; i < codes.size(); ++i)
    g.vertices.push_back({static_cast<int>(i), vtype, codes[i]});
  for (std::size_t i = 0; i + 1 < codes.size(); ++i)
    g.edges.push_back({static_cast<int>(i), static_cast<int>(i + 1), etype});
  return g;
}

inline reveal::FeatureRecord record(const std::string& id, int label,
                                    std::vector<double> features) {
  reveal::FeatureRecord r;
  r.id = id;
  r.label = label;
  r.project = "fixture";
  r.features = std::move(features);
  return r;
}

}  // namespace testutil
