#ifndef PSEVAL_SCORERS_HPP
#define PSEVAL_SCORERS_HPP

// Summary scorers. Every scorer returns "higher is better"; degenerate
// summaries get a fixed sentinel instead of an error.

#include <cmath>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pseval/corpus.hpp"
#include "pseval/embed.hpp"
#include "pseval/pseudoref.hpp"
#include "pseval/wmd.hpp"

namespace pseval {

inline constexpr double kWmdSentinel = -2.0;
inline constexpr double kCosineSentinel = -1.0;
inline constexpr double kTfidfSentinel = 0.0;
inline const double kJsSentinel = -std::log(2.0);

// A sentence together with the unit (document or summary) it belongs to,
// which is how the embedding store is keyed.
struct UnitSentence {
  std::string unit_id;
  const SentenceRecord* sentence = nullptr;
};

std::vector<UnitSentence> summary_units(const CandidateSummary& summary);
std::vector<UnitSentence> reference_units(const Topic& topic, const PseudoReference& ref);
std::vector<UnitSentence> source_units(const Topic& topic);
std::vector<UnitSentence> selection_units(const Topic& topic, const std::vector<SentenceRef>& picks);

using TokenBag = WeightedTokenBag<double>;

// One entry per retained token occurrence, weighted by idf(stem) when `idf`
// is given and uniformly otherwise, then normalized. Throws
// DegenerateInputError when nothing survives filtering, and ValidationError
// when stopwords are requested but the store holds no vectors for them.
TokenBag make_bag(std::string_view topic_id, const std::vector<UnitSentence>& sentences, const EmbeddingStore& store,
                  const IdfTable* idf, bool filter_stopwords = true);

enum class WmdMode { exact, relaxed, auto_select };

WmdMode parse_wmd_mode(std::string_view name);
std::string to_string(WmdMode mode);

struct SupertOptions {
  WmdMode mode = WmdMode::auto_select;
  bool idf_weights = true;
  bool filter_stopwords = true;
  // auto_select solves exactly when the cost matrix has at most this many cells.
  long long exact_cell_limit = 10000;
};

// -WMD(reference, summary); kWmdSentinel when the summary bag is degenerate.
double score_summary(const TokenBag* summary, const TokenBag& reference, WmdMode mode,
                     long long exact_cell_limit = 10000);

// Scores candidate summaries of one topic against a fixed pseudo reference.
class SupertScorer {
 public:
  // Throws DegenerateInputError when the pseudo reference has no content token.
  SupertScorer(const Topic& topic, const EmbeddingStore& store, const PseudoReference& ref,
               const SupertOptions& options = {});

  double score(const CandidateSummary& summary) const;
  double score(const std::vector<UnitSentence>& summary) const;
  const TokenBag& reference_bag() const { return reference_; }

 private:
  std::string topic_id_;
  const EmbeddingStore* store_;
  IdfTable idf_;
  SupertOptions options_;
  TokenBag reference_;
};

// Cosine of the mean-pooled sentence vectors; kCosineSentinel when either side is empty.
double score_cosine_pooled(std::string_view topic_id, const std::vector<UnitSentence>& summary,
                           const std::vector<UnitSentence>& other, const EmbeddingStore& store);

// Stem statistics of a topic's source documents, shared by the lexical baselines.
struct SourceStats {
  std::map<std::string, double, std::less<>> counts;  // non-stopword stem -> occurrences
  double total = 0;
  IdfTable idf;
};

SourceStats source_stats(const Topic& topic);
SourceStats source_stats(const Topic& topic, const IdfTable& idf);

// Cosine of raw-tf x idf vectors; kTfidfSentinel when degenerate.
double score_tfidf(const std::vector<const SentenceRecord*>& summary, const SourceStats& source);
double score_tfidf(const CandidateSummary& summary, const Topic& topic);

// -JS(P || Q) in nats; kJsSentinel when degenerate.
double score_js(const std::vector<const SentenceRecord*>& summary, const SourceStats& source);
double score_js(const CandidateSummary& summary, const Topic& topic);

// JS divergence of two count distributions (need not be normalized).
double js_divergence(const std::map<std::string, double, std::less<>>& p,
                     const std::map<std::string, double, std::less<>>& q);

std::vector<const SentenceRecord*> sentence_ptrs(const std::vector<UnitSentence>& units);
std::vector<const SentenceRecord*> sentence_ptrs(const CandidateSummary& summary);

struct ScoreRow {
  std::string topic_id;
  std::string summary_id;
  std::string metric_name;
  double score = 0;
};

// Columns topic_id, summary_id, metric_name, score; rows sorted by the first three.
void write_score_tsv(std::ostream& out, std::vector<ScoreRow> rows);
std::vector<ScoreRow> read_score_tsv(std::istream& in, const std::string& source_name);

// Shortest round-trip decimal form used in every text output.
std::string format_real(double v);

}  // namespace pseval

#endif  // PSEVAL_SCORERS_HPP
