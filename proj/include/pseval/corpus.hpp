#ifndef PSEVAL_CORPUS_HPP
#define PSEVAL_CORPUS_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pseval {

struct TokenRecord {
  std::string surface;  // lowercased surface form
  std::string stem;
  bool is_stopword = false;

  bool operator==(const TokenRecord&) const = default;
};

struct SentenceRecord {
  int sent_idx = 0;
  std::string raw_text;
  std::vector<TokenRecord> tokens;
  int word_count = 0;  // whitespace-delimited words of raw_text

  // Number of tokens that survive stopword filtering.
  std::size_t content_token_count() const;
  // True when no content token survived; such sentences are kept but cannot
  // contribute mass to a token bag.
  bool is_degenerate() const { return content_token_count() == 0; }

  bool operator==(const SentenceRecord&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<SentenceRecord> sentences;

  bool operator==(const Document&) const = default;
};

struct CandidateSummary {
  std::string summary_id;
  std::string text;
  std::vector<SentenceRecord> sentences;
  std::optional<double> human_rating;

  int word_count() const;

  bool operator==(const CandidateSummary&) const = default;
};

struct Topic {
  std::string topic_id;
  std::vector<Document> documents;
  std::vector<CandidateSummary> summaries;

  // Index of the document with this id, or -1.
  int document_index(std::string_view doc_id) const;
  const SentenceRecord& sentence(std::string_view doc_id, int sent_idx) const;
  std::size_t source_sentence_count() const;

  bool operator==(const Topic&) const = default;
};

using StopwordSet = std::set<std::string, std::less<>>;

enum class CorpusFormat { plain_dirs, jsonl };

CorpusFormat parse_corpus_format(std::string_view name);

// Shipped English stopword list (lowercase).
const StopwordSet& default_stopwords();
inline constexpr std::string_view kStopwordListVersion = "en-v1";

// Abbreviations (lowercase, without the trailing period) after which a period
// does not end a sentence.
const std::set<std::string, std::less<>>& default_abbreviations();

// Classic Porter (1980) stemmer. Input is expected lowercase ASCII letters;
// other input is returned unchanged.
std::string porter_stem(std::string_view word);

// Rule-based sentence splitter. Sentences end at a run of . ! ? (plus closing
// quotes or brackets) followed by whitespace and an uppercase letter, digit
// or opening quote, unless the period follows a listed abbreviation. Blank
// lines always end a sentence. Whitespace inside a sentence is collapsed.
std::vector<std::string> segment_sentences(std::string_view text);

// Tokenizes on non-alphanumeric boundaries (bytes >= 0x80 count as word
// characters), lowercases, flags stopwords and stems. sent_idx is left at 0.
SentenceRecord preprocess(std::string_view sentence, const StopwordSet& stopwords = default_stopwords());

// segment_sentences + preprocess, with sent_idx = position.
std::vector<SentenceRecord> analyze_text(std::string_view text,
                                         const StopwordSet& stopwords = default_stopwords());

int count_words(std::string_view text);

// Loads a corpus. Topics are sorted by topic_id, documents by doc_id and
// summaries by summary_id. Throws IoError, ParseError or ValidationError.
std::vector<Topic> load_corpus(const std::filesystem::path& root, CorpusFormat format,
                               const StopwordSet& stopwords = default_stopwords());

std::vector<Topic> read_corpus_jsonl(std::istream& in, const std::string& source_name,
                                     const StopwordSet& stopwords = default_stopwords());

// One line per document and summary, in corpus order. Document text is the
// sentence list joined by blank lines so re-segmentation is exact.
void write_corpus_jsonl(std::ostream& out, const std::vector<Topic>& corpus);

// Checks the Topic invariants (unique ids, at least one document, contiguous
// sentence indices). Throws ValidationError.
void validate_topic(const Topic& topic);

}  // namespace pseval

#endif  // PSEVAL_CORPUS_HPP
