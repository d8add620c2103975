#ifndef PSEVAL_TESTS_HELPERS_HPP
#define PSEVAL_TESTS_HELPERS_HPP

// Builders and generators shared by the test binaries.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "pseval/corpus.hpp"
#include "pseval/embed.hpp"

namespace testing_support {

namespace fs = std::filesystem;

// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double normal() {
    std::normal_distribution<double> d;
    return d(eng_);
  }
  bool coin(double p = 0.5) { return uniform() < p; }

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  std::vector<double> reals(int n, double lo, double hi) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  // Small integers, so ties are frequent.
  std::vector<double> tied(int n, int levels) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = integer(0, levels - 1);
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// A topic built from raw texts: docs are (doc_id, text), summaries (summary_id, text, rating).
struct SummarySpec {
  std::string id;
  std::string text;
  std::optional<double> rating;
};

inline pseval::Topic make_topic(const std::string& topic_id,
                                const std::vector<std::pair<std::string, std::string>>& docs,
                                const std::vector<SummarySpec>& summaries = {}) {
  pseval::Topic t;
  t.topic_id = topic_id;
  for (const auto& [id, text] : docs) t.documents.push_back({id, pseval::analyze_text(text)});
  for (const auto& s : summaries) t.summaries.push_back({s.id, s.text, pseval::analyze_text(s.text), s.rating});
  return t;
}

// A topic whose document sentences are given one per entry (no splitting involved).
inline pseval::Topic make_topic_sentences(const std::string& topic_id,
                                          const std::vector<std::pair<std::string, std::vector<std::string>>>& docs) {
  pseval::Topic t;
  t.topic_id = topic_id;
  for (const auto& [id, sentences] : docs) {
    pseval::Document d{id, {}};
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      auto rec = pseval::preprocess(sentences[i]);
      rec.sent_idx = static_cast<int>(i);
      d.sentences.push_back(std::move(rec));
    }
    t.documents.push_back(std::move(d));
  }
  return t;
}

// Store whose sentence vectors are chosen by the caller, one column per
// document sentence in (document order, position) order. Token vectors are
// copies of the sentence vector.
inline pseval::EmbeddingStore store_with_vectors(const pseval::Topic& topic, const Eigen::MatrixXd& vectors) {
  pseval::EmbeddingStore store(static_cast<int>(vectors.rows()), false);
  Eigen::Index col = 0;
  for (const auto& d : topic.documents) {
    for (const auto& s : d.sentences) {
      pseval::SentenceEmbedding e;
      e.sentence = vectors.col(col++);
      const auto kept = pseval::retained_tokens(s, false);
      e.tokens.resize(vectors.rows(), static_cast<Eigen::Index>(kept.size()));
      for (std::size_t k = 0; k < kept.size(); ++k) {
        e.tokens.col(static_cast<Eigen::Index>(k)) = e.sentence;
        e.surfaces.push_back(kept[k]->surface);
      }
      store.insert({topic.topic_id, d.doc_id, s.sent_idx}, std::move(e));
    }
  }
  return store;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("pseval_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline fs::path source_dir() { return PSEVAL_SOURCE_DIR; }
inline fs::path test_data() { return PSEVAL_TEST_DATA; }

}  // namespace testing_support

#endif  // PSEVAL_TESTS_HELPERS_HPP
