#ifndef PSEVAL_SYNTH_HPP
#define PSEVAL_SYNTH_HPP

// Deterministic synthetic corpus with planted summary quality.
//
// Each topic has a handful of "facts" (short sentences over topic-specific
// pseudo-words). The lead sentences of every document restate some facts with
// light noise; the remaining sentences are filler over a topic background
// vocabulary. The reference summary is the list of facts. Candidate summaries
// are copies of the reference in which each content word survives with
// probability `fidelity` and is otherwise replaced by a background or an
// unseen word; the rating is the share of content words that survived.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pseval/corpus.hpp"

namespace pseval {

struct SyntheticOptions {
  int topics = 20;
  int documents = 6;
  int min_sentences = 16;
  int max_sentences = 24;
  int facts = 6;
  int fact_words = 8;         // content words per fact
  int lead = 5;               // fact-bearing sentences at the top of each document
  double lead_noise = 0.1;    // chance a lead content word is swapped for a background word
  int background_words = 60;  // per-topic filler vocabulary
  int unseen_words = 40;      // per-topic words that never occur in the sources
  int filler_words_min = 6;
  int filler_words_max = 10;
  int summaries = 10;
  double in_source_noise = 0.5;  // share of replacement words drawn from the background vocabulary
  std::uint64_t seed = 20200501;
};

struct ReferenceSummary {
  std::string topic_id;
  std::string ref_id;
  std::string text;
};

struct SyntheticCorpus {
  std::vector<Topic> topics;
  std::vector<ReferenceSummary> references;
  std::string corpus_jsonl;  // the corpus in jsonl form, as shipped
};

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options = {});

void write_references_jsonl(std::ostream& out, const std::vector<ReferenceSummary>& refs);
std::vector<ReferenceSummary> read_references_jsonl(std::istream& in, const std::string& source_name);
std::vector<ReferenceSummary> load_references(const std::filesystem::path& path);

}  // namespace pseval

#endif  // PSEVAL_SYNTH_HPP
