#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "pseval/corpus.hpp"
#include "pseval/error.hpp"

using namespace pseval;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

std::vector<std::pair<std::string, std::string>> porter_vectors() {
  std::ifstream in(testing_support::test_data() / "porter_vectors.tsv");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

void make_plain_corpus(const std::filesystem::path& root) {
  write_text(root / "t1/docs/d2.txt", "Second document. It has two sentences.");
  write_text(root / "t1/docs/d1.txt", "Dr. Smith left. He returned. Then he left again!");
  write_text(root / "t1/summaries/s2.txt", "Smith left and returned.");
  write_text(root / "t1/summaries/s1.txt", "Smith left.");
  write_text(root / "t1/summaries/s3.txt", "Nothing happened.");
  write_text(root / "t1/ratings.tsv", "s1\t0.25\ns2\t0.75\n");
}

}  // namespace

TEST(Porter, MatchesReferenceVectors) {
  const auto vectors = porter_vectors();
  ASSERT_GT(vectors.size(), 800u);
  int failures = 0;
  for (const auto& [word, stem] : vectors) {
    if (porter_stem(word) != stem) {
      ADD_FAILURE() << word << ": expected " << stem << ", got " << porter_stem(word);
      if (++failures > 20) break;
    }
  }
}

TEST(Porter, ShortAndNonAlphabeticInputUnchanged) {
  EXPECT_EQ(porter_stem("a"), "a");
  EXPECT_EQ(porter_stem("is"), "i");  // no short-word guard, as in the published algorithm
  EXPECT_EQ(porter_stem("2008"), "2008");
  EXPECT_EQ(porter_stem(""), "");
}

TEST(Segment, OneTerminatorPerSentence) {
  EXPECT_EQ(segment_sentences("A. B? C!"), (std::vector<std::string>{"A.", "B?", "C!"}));
}

TEST(Segment, EmptyInput) {
  EXPECT_TRUE(segment_sentences("").empty());
  EXPECT_TRUE(segment_sentences("   \n\n ").empty());
}

TEST(Segment, AbbreviationDoesNotSplit) {
  ASSERT_TRUE(default_abbreviations().contains("dr"));
  EXPECT_EQ(segment_sentences("Dr. Smith left. He returned."),
            (std::vector<std::string>{"Dr. Smith left.", "He returned."}));
}

TEST(Segment, LowercaseAfterPeriodDoesNotSplit) {
  EXPECT_EQ(segment_sentences("It cost 3.5 dollars. e.g. this stays."),
            (std::vector<std::string>{"It cost 3.5 dollars. e.g. this stays."}));
}

TEST(Segment, BlankLineEndsSentence) {
  EXPECT_EQ(segment_sentences("no terminator here\n\nnext part"),
            (std::vector<std::string>{"no terminator here", "next part"}));
}

TEST(Segment, ClosingQuoteStaysWithSentence) {
  EXPECT_EQ(segment_sentences("He said \"stop.\" Then he left."),
            (std::vector<std::string>{"He said \"stop.\"", "Then he left."}));
}

TEST(Segment, ConcatenationPreservesTextModuloWhitespace) {
  testing_support::Gen g(11);
  const std::vector<std::string> pieces{"Alpha", "beta.", "Gamma!", "delta?", "Mr.", "Epsilon", "\n\n", "  ", "zeta",
                                        "\"Quote.\"", "(Paren.)", "3.", "Omega"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const int len = g.integer(0, 25);
    for (int k = 0; k < len; ++k) {
      text += pieces[static_cast<std::size_t>(g.integer(0, static_cast<int>(pieces.size()) - 1))];
      text += g.coin() ? " " : "\t";
    }
    std::string squeezed_in, squeezed_out;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) squeezed_in += c;
    for (const auto& s : segment_sentences(text)) {
      EXPECT_FALSE(s.empty());
      for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) squeezed_out += c;
    }
    ASSERT_EQ(squeezed_in, squeezed_out) << "input: " << text;
  }
}

TEST(Preprocess, StopwordsAndStems) {
  const auto r = preprocess("The cats ran", StopwordSet{"the"});
  ASSERT_EQ(r.tokens.size(), 3u);
  EXPECT_EQ(r.tokens[0], (TokenRecord{"the", "the", true}));
  EXPECT_EQ(r.tokens[1], (TokenRecord{"cats", "cat", false}));
  EXPECT_EQ(r.tokens[2], (TokenRecord{"ran", "ran", false}));
  EXPECT_EQ(r.word_count, 3);
  EXPECT_FALSE(r.is_degenerate());
}

TEST(Preprocess, EmptySentenceIsFlagged) {
  const auto r = preprocess("", StopwordSet{});
  EXPECT_TRUE(r.tokens.empty());
  EXPECT_TRUE(r.is_degenerate());
}

TEST(Preprocess, AllStopwordsIsFlaggedButKept) {
  const auto r = preprocess("the of and");
  EXPECT_EQ(r.tokens.size(), 3u);
  EXPECT_TRUE(r.is_degenerate());
  EXPECT_EQ(r.content_token_count(), 0u);
}

TEST(Preprocess, CaseFolding) {
  const auto r = preprocess("CATS cats", StopwordSet{});
  ASSERT_EQ(r.tokens.size(), 2u);
  EXPECT_EQ(r.tokens[0].stem, r.tokens[1].stem);
  EXPECT_EQ(r.tokens[0].surface, "cats");
}

TEST(Preprocess, SplitsOnNonAlphanumeric) {
  const auto r = preprocess("state-of-the-art, U.S. 2008's", StopwordSet{});
  std::vector<std::string> surfaces;
  for (const auto& t : r.tokens) surfaces.push_back(t.surface);
  EXPECT_EQ(surfaces, (std::vector<std::string>{"state", "of", "the", "art", "u", "s", "2008", "s"}));
  EXPECT_EQ(r.word_count, 3);
}

TEST(Preprocess, TokenInvariants) {
  testing_support::Gen g(5);
  const std::string alphabet = "abcdeXYZ019 ,.-'\t";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const int len = g.integer(0, 60);
    for (int k = 0; k < len; ++k) s += alphabet[static_cast<std::size_t>(g.integer(0, static_cast<int>(alphabet.size()) - 1))];
    const auto r = preprocess(s);
    EXPECT_EQ(r.word_count, count_words(s));
    for (const auto& t : r.tokens) {
      for (char c : t.stem) EXPECT_FALSE(std::isupper(static_cast<unsigned char>(c)));
      if (!t.is_stopword) {
        EXPECT_FALSE(t.stem.empty());
      }
      EXPECT_EQ(t.is_stopword, default_stopwords().contains(t.surface));
    }
  }
}

TEST(LoadCorpus, PlainDirsStructure) {
  TempDir dir("plain");
  make_plain_corpus(dir.path());
  const auto corpus = load_corpus(dir.path(), CorpusFormat::plain_dirs);
  ASSERT_EQ(corpus.size(), 1u);
  const auto& t = corpus[0];
  EXPECT_EQ(t.topic_id, "t1");
  ASSERT_EQ(t.documents.size(), 2u);
  EXPECT_EQ(t.documents[0].doc_id, "d1");
  EXPECT_EQ(t.documents[1].doc_id, "d2");
  ASSERT_EQ(t.summaries.size(), 3u);
  EXPECT_EQ(t.summaries[0].summary_id, "s1");
  EXPECT_EQ(t.summaries[0].human_rating, 0.25);
  EXPECT_EQ(t.summaries[1].human_rating, 0.75);
  EXPECT_FALSE(t.summaries[2].human_rating.has_value());
  ASSERT_EQ(t.documents[0].sentences.size(), 3u);
  EXPECT_EQ(t.documents[0].sentences[0].raw_text, "Dr. Smith left.");
}

TEST(LoadCorpus, EmptyDirectoryIsEmptyCorpus) {
  TempDir dir("empty");
  EXPECT_TRUE(load_corpus(dir.path(), CorpusFormat::plain_dirs).empty());
}

TEST(LoadCorpus, MissingDirectoryIsIoError) {
  EXPECT_THROW(load_corpus("/nonexistent/pseval/corpus", CorpusFormat::plain_dirs), IoError);
}

TEST(LoadCorpus, DuplicateSummaryIdIsValidationError) {
  std::istringstream in(
      "{\"topic_id\":\"t\",\"doc_id\":\"d\",\"kind\":\"doc\",\"text\":\"One.\"}\n"
      "{\"topic_id\":\"t\",\"doc_id\":\"s\",\"kind\":\"summary\",\"text\":\"A.\"}\n"
      "{\"topic_id\":\"t\",\"doc_id\":\"s\",\"kind\":\"summary\",\"text\":\"B.\"}\n");
  EXPECT_THROW(read_corpus_jsonl(in, "dup.jsonl"), ValidationError);
}

TEST(LoadCorpus, MalformedRecordNamesFileAndLine) {
  std::istringstream in(
      "{\"topic_id\":\"t\",\"doc_id\":\"d\",\"kind\":\"doc\",\"text\":\"One.\"}\n"
      "{\"topic_id\":\"t\",\"doc_id\":\"d2\",\"kind\":\"doc\"\n");
  try {
    read_corpus_jsonl(in, "bad.jsonl");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.file(), "bad.jsonl");
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadCorpus, BadRatingIsParseError) {
  TempDir dir("badrating");
  make_plain_corpus(dir.path());
  write_text(dir.path() / "t1/ratings.tsv", "s1\tabc\n");
  EXPECT_THROW(load_corpus(dir.path(), CorpusFormat::plain_dirs), ParseError);
}

TEST(LoadCorpus, RatingForUnknownSummaryIsValidationError) {
  TempDir dir("unknownrating");
  make_plain_corpus(dir.path());
  write_text(dir.path() / "t1/ratings.tsv", "s9\t0.5\n");
  EXPECT_THROW(load_corpus(dir.path(), CorpusFormat::plain_dirs), ValidationError);
}

TEST(LoadCorpus, TopicWithoutDocumentsIsValidationError) {
  std::istringstream in("{\"topic_id\":\"t\",\"doc_id\":\"s\",\"kind\":\"summary\",\"text\":\"A.\"}\n");
  EXPECT_THROW(read_corpus_jsonl(in, "nodocs.jsonl"), ValidationError);
}

TEST(LoadCorpus, JsonlRoundTripIsStructurallyEqual) {
  TempDir dir("roundtrip");
  make_plain_corpus(dir.path() / "plain");
  const auto corpus = load_corpus(dir.path() / "plain", CorpusFormat::plain_dirs);
  {
    std::ofstream out(dir.path() / "c.jsonl");
    write_corpus_jsonl(out, corpus);
  }
  const auto again = load_corpus(dir.path() / "c.jsonl", CorpusFormat::jsonl);
  EXPECT_EQ(corpus, again);
}

TEST(LoadCorpus, SyntheticCorpusRoundTripsAndKeepsPositions) {
  const auto corpus = load_corpus(testing_support::source_dir() / "data/synthetic/corpus.jsonl", CorpusFormat::jsonl);
  ASSERT_EQ(corpus.size(), 20u);
  for (const auto& t : corpus) {
    validate_topic(t);
    for (const auto& d : t.documents)
      for (std::size_t i = 0; i < d.sentences.size(); ++i) EXPECT_EQ(d.sentences[i].sent_idx, static_cast<int>(i));
  }
  std::ostringstream out;
  write_corpus_jsonl(out, corpus);
  std::istringstream in(out.str());
  EXPECT_EQ(read_corpus_jsonl(in, "again"), corpus);
}

TEST(LoadCorpus, DeterministicSerialization) {
  TempDir dir("det");
  make_plain_corpus(dir.path());
  std::ostringstream a, b;
  write_corpus_jsonl(a, load_corpus(dir.path(), CorpusFormat::plain_dirs));
  write_corpus_jsonl(b, load_corpus(dir.path(), CorpusFormat::plain_dirs));
  EXPECT_EQ(a.str(), b.str());
}

TEST(LoadCorpus, FormatNames) {
  EXPECT_EQ(parse_corpus_format("jsonl"), CorpusFormat::jsonl);
  EXPECT_EQ(parse_corpus_format("plain_dirs"), CorpusFormat::plain_dirs);
  EXPECT_THROW(parse_corpus_format("xml"), ValidationError);
}
