#ifndef PSEVAL_EMBED_HPP
#define PSEVAL_EMBED_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pseval/corpus.hpp"
#include "pseval/error.hpp"

namespace pseval {

// (topic, document-or-summary id, sentence index)
struct UnitKey {
  std::string topic_id;
  std::string unit_id;
  int sent_idx = 0;

  auto operator<=>(const UnitKey&) const = default;
  std::string str() const;
};

struct SentenceEmbedding {
  Eigen::VectorXd sentence;          // dimension
  Eigen::MatrixXd tokens;            // dimension x retained token count
  std::vector<std::string> surfaces;  // retained token surfaces, aligned with columns of `tokens`
};

// Immutable after construction; concurrent reads are safe.
class EmbeddingStore {
 public:
  EmbeddingStore(int dimension, bool include_stopwords);

  int dimension() const { return dimension_; }
  // Whether stopword tokens carry token vectors.
  bool include_stopwords() const { return include_stopwords_; }
  std::size_t size() const { return entries_.size(); }

  // Throws ValidationError on wrong shapes, non-finite values or a duplicate key.
  void insert(UnitKey key, SentenceEmbedding value);

  const SentenceEmbedding* find(const UnitKey& key) const;
  // Throws CoverageError when absent.
  const SentenceEmbedding& at(const UnitKey& key) const;
  const SentenceEmbedding& at(std::string_view topic_id, std::string_view unit_id, int sent_idx) const;

  const std::map<UnitKey, SentenceEmbedding>& entries() const { return entries_; }

 private:
  int dimension_;
  bool include_stopwords_;
  std::map<UnitKey, SentenceEmbedding> entries_;
};

// Tokens of `s` that carry vectors under the given policy.
std::vector<const TokenRecord*> retained_tokens(const SentenceRecord& s, bool include_stopwords);

// ---- fallback encoder -------------------------------------------------------

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// Unit-norm Gaussian vector from a Mersenne Twister (mt19937_64) seeded with
// fnv1a64(stem) ^ seed; normals come from the Marsaglia polar method on
// 53-bit uniforms. Throws ValidationError when dimension < 2.
Eigen::VectorXd fallback_encode(std::string_view stem, int dimension, std::uint64_t seed);
Eigen::VectorXd fallback_encode(const TokenRecord& token, int dimension, std::uint64_t seed);

struct FallbackConfig {
  int dimension = 64;
  std::uint64_t seed = 0;
  bool include_stopwords = false;
};

// Builds a store for every sentence (documents and summaries) of the corpus.
// Sentence vectors are the mean of retained token vectors; sentences without
// retained tokens get the encoding of their lowercased raw text.
EmbeddingStore encode_fallback(const std::vector<Topic>& corpus, const FallbackConfig& config);
void encode_fallback_into(EmbeddingStore& store, const Topic& topic, const FallbackConfig& config);

// ---- pooling ----------------------------------------------------------------

// Column mean of a dim x n block. Throws DegenerateInputError when n == 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> mean_pool(const Eigen::MatrixBase<Derived>& columns) {
  if (columns.cols() == 0) throw DegenerateInputError("cannot pool an empty list of vectors");
  return columns.rowwise().mean();
}

Eigen::VectorXd pool_sentence(const std::vector<Eigen::VectorXd>& token_vectors);
Eigen::VectorXd pool_document(const std::vector<Eigen::VectorXd>& sentence_vectors);

// ---- idf --------------------------------------------------------------------

class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::map<std::string, int, std::less<>> doc_freq, int n_units);

  // ln((n_units + 1) / (doc_freq + 1)) + 1; unseen stems have doc_freq 0.
  double idf(std::string_view stem) const;
  int doc_freq(std::string_view stem) const;
  int n_units() const { return n_units_; }
  const std::map<std::string, int, std::less<>>& table() const { return doc_freq_; }

 private:
  std::map<std::string, int, std::less<>> doc_freq_;
  int n_units_ = 0;
};

// Units are the topic's source-document sentences.
IdfTable build_idf(const Topic& topic);

// ---- embedding file ---------------------------------------------------------

struct EmbeddingLoadOptions {
  bool include_stopwords = false;
};

// Reads the JSON Lines embedding file and validates it against the corpus:
// constant dimension, finite values, token alignment, and full coverage of
// every document and summary sentence.
EmbeddingStore load_embeddings(const std::filesystem::path& path, const std::vector<Topic>& corpus,
                               const EmbeddingLoadOptions& options = {});
EmbeddingStore read_embeddings(std::istream& in, const std::string& source_name, const std::vector<Topic>& corpus,
                               const EmbeddingLoadOptions& options = {});

// Writes records in corpus order (topic, documents then summaries, sentence).
void write_embeddings(std::ostream& out, const EmbeddingStore& store, const std::vector<Topic>& corpus);

}  // namespace pseval

#endif  // PSEVAL_EMBED_HPP
