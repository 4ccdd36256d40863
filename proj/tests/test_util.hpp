#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "slda/common.hpp"
#include "slda/corpus.hpp"
#include "slda/model.hpp"

namespace testutil {

using namespace slda;

inline Matrix random_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

/// Random alpha with the given sum, uniform-then-normalized topics, normal eta.
inline SldaModel toy_model(int v, int k, double alpha0, double sigma, Rng& rng,
                           bool random_alpha = true) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  SldaModel m;
  m.alpha.resize(k);
  for (int i = 0; i < k; ++i) m.alpha(i) = random_alpha ? 0.2 + unif(rng) : 1.0;
  m.alpha *= alpha0 / m.alpha.sum();
  for (;;) {
    m.topics.resize(v, k);
    for (int i = 0; i < k; ++i) {
      for (int w = 0; w < v; ++w) m.topics(w, i) = unif(rng);
      m.topics.col(i) /= m.topics.col(i).sum();
    }
    Eigen::JacobiSVD<Matrix> svd(m.topics);
    if (svd.singularValues()(k - 1) > 1e-2) break;
  }
  m.eta.resize(k);
  for (int i = 0; i < k; ++i) m.eta(i) = normal(rng);
  m.sigma = sigma;
  return m;
}

inline Document random_doc(int v, int m, Rng& rng, double response = 0.0) {
  std::uniform_int_distribution<int> word(0, v - 1);
  std::map<int, int> counts;
  for (int j = 0; j < m; ++j) ++counts[word(rng)];
  Document d;
  for (auto [w, c] : counts) d.words.push_back({w, c});
  d.response = response;
  return d;
}

inline Corpus random_corpus(int v, int docs, int m_min, int m_max, Rng& rng) {
  std::uniform_int_distribution<int> len(m_min, m_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  Corpus c;
  c.vocab_size = v;
  for (int d = 0; d < docs; ++d) c.documents.push_back(random_doc(v, len(rng), rng, normal(rng)));
  return c;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("slda_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Captures warnings for the lifetime of the object.
class WarningCollector {
 public:
  WarningCollector() {
    set_warning_sink([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCollector() { set_warning_sink(nullptr); }
  bool contains(const std::string& needle) const {
    for (const auto& m : messages) {
      if (m.find(needle) != std::string::npos) return true;
    }
    return false;
  }
  std::vector<std::string> messages;
};

}  // namespace testutil
