#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "pseval/corpus.hpp"

namespace pseval {

const StopwordSet& default_stopwords() {
  // en-v1: the common 179-entry English list, minus the contracted forms
  // ("don't", ...) that the tokenizer can never produce.
  static const StopwordSet words{
      "i",        "me",      "my",      "myself",   "we",      "our",     "ours",     "ourselves",
      "you",      "your",    "yours",   "yourself", "yourselves",         "he",       "him",
      "his",      "himself", "she",     "her",      "hers",    "herself", "it",       "its",
      "itself",   "they",    "them",    "their",    "theirs",  "themselves",          "what",
      "which",    "who",     "whom",    "this",     "that",    "these",   "those",    "am",
      "is",       "are",     "was",     "were",     "be",      "been",    "being",    "have",
      "has",      "had",     "having",  "do",       "does",    "did",     "doing",    "a",
      "an",       "the",     "and",     "but",      "if",      "or",      "because",  "as",
      "until",    "while",   "of",      "at",       "by",      "for",     "with",     "about",
      "against",  "between", "into",    "through",  "during",  "before",  "after",    "above",
      "below",    "to",      "from",    "up",       "down",    "in",      "out",      "on",
      "off",      "over",    "under",   "again",    "further", "then",    "once",     "here",
      "there",    "when",    "where",   "why",      "how",     "all",     "any",      "both",
      "each",     "few",     "more",    "most",     "other",   "some",    "such",     "no",
      "nor",      "not",     "only",    "own",      "same",    "so",      "than",     "too",
      "very",     "s",       "t",       "can",      "will",    "just",    "don",      "should",
      "now",      "d",       "ll",      "m",        "o",       "re",      "ve",       "y",
      "ain",      "aren",    "couldn",  "didn",     "doesn",   "hadn",    "hasn",     "haven",
      "isn",      "ma",      "mightn",  "mustn",    "needn",   "shan",    "shouldn",  "wasn",
      "weren",    "won",     "wouldn",
  };
  return words;
}

const std::set<std::string, std::less<>>& default_abbreviations() {
  static const std::set<std::string, std::less<>> abbrevs{
      "mr",   "mrs",  "ms",   "dr",   "prof", "sr",   "jr",   "st",   "mt",   "ft",   "gen",
      "gov",  "sen",  "rep",  "rev",  "lt",   "col",  "capt", "cmdr", "sgt",  "maj",  "adm",
      "pres", "supt", "inc",  "ltd",  "co",   "corp", "bros", "no",   "nos",  "vol",  "vs",
      "etc",  "e.g",  "i.e",  "cf",   "al",   "approx", "dept", "est", "fig", "jan",  "feb",
      "mar",  "apr",  "jun",  "jul",  "aug",  "sep",  "sept", "oct",  "nov",  "dec",  "u.s",
      "u.k",  "u.n",  "a.m",  "p.m",  "ph.d", "d.c",
  };
  return abbrevs;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a UTF-8 curly quote starting at s[i], or 0.
std::size_t curly_quote_at(std::string_view s, std::size_t i, bool opening) {
  if (i + 3 > s.size() || static_cast<unsigned char>(s[i]) != 0xE2 ||
      static_cast<unsigned char>(s[i + 1]) != 0x80)
    return 0;
  const auto third = static_cast<unsigned char>(s[i + 2]);
  if (opening) return (third == 0x9C || third == 0x98) ? 3 : 0;
  return (third == 0x9D || third == 0x99) ? 3 : 0;
}

bool starts_sentence(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  return std::isupper(c) || std::isdigit(c) || c == '"' || c == '\'' || c == '(' ||
         c == '[' || curly_quote_at(s, i, true) > 0;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

// Word immediately before position `dot` (exclusive), lowercased, leading
// punctuation stripped.
std::string word_before(std::string_view s, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space(s[begin - 1])) --begin;
  std::string w;
  for (std::size_t i = begin; i < dot; ++i)
    w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
  const auto first = w.find_first_not_of("\"'([");
  return first == std::string::npos ? std::string() : w.substr(first);
}

void split_paragraph(std::string_view p, std::vector<std::string>& out) {
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < p.size()) {
    if (!is_terminator(p[i])) {
      ++i;
      continue;
    }
    const std::size_t term = i;
    std::size_t j = i;
    while (j < p.size()) {
      if (is_terminator(p[j]) || p[j] == '"' || p[j] == '\'' || p[j] == ')' || p[j] == ']') {
        ++j;
      } else if (auto q = curly_quote_at(p, j, false)) {
        j += q;
      } else {
        break;
      }
    }
    std::size_t k = j;
    while (k < p.size() && is_space(p[k])) ++k;
    const bool boundary = k > j && k < p.size() && starts_sentence(p, k);
    const bool abbreviation = p[term] == '.' && default_abbreviations().contains(word_before(p, term));
    if (boundary && !abbreviation) {
      auto sentence = collapse_whitespace(p.substr(start, j - start));
      if (!sentence.empty()) out.push_back(std::move(sentence));
      start = k;
    }
    i = j;
  }
  auto tail = collapse_whitespace(p.substr(start));
  if (!tail.empty()) out.push_back(std::move(tail));
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t para_start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\n') {
      ++i;
      continue;
    }
    // A newline followed by optional horizontal whitespace and another newline.
    std::size_t j = i + 1;
    while (j < text.size() && text[j] != '\n' && is_space(text[j])) ++j;
    if (j < text.size() && text[j] == '\n') {
      split_paragraph(text.substr(para_start, i - para_start), out);
      while (j < text.size() && is_space(text[j])) ++j;
      para_start = j;
      i = j;
    } else {
      i = j;
    }
  }
  if (para_start < text.size()) split_paragraph(text.substr(para_start), out);
  return out;
}

int count_words(std::string_view text) {
  int n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::size_t SentenceRecord::content_token_count() const {
  std::size_t n = 0;
  for (const auto& t : tokens)
    if (!t.is_stopword) ++n;
  return n;
}

SentenceRecord preprocess(std::string_view sentence, const StopwordSet& stopwords) {
  SentenceRecord rec;
  rec.raw_text = std::string(sentence);
  rec.word_count = count_words(sentence);
  std::size_t i = 0;
  while (i < sentence.size()) {
    if (!is_word_char(sentence[i])) {
      ++i;
      continue;
    }
    std::string word;
    while (i < sentence.size() && is_word_char(sentence[i])) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(sentence[i]))));
      ++i;
    }
    TokenRecord tok;
    tok.is_stopword = stopwords.contains(word);
    tok.stem = porter_stem(word);
    if (tok.stem.empty()) tok.stem = word;
    tok.surface = std::move(word);
    rec.tokens.push_back(std::move(tok));
  }
  return rec;
}

std::vector<SentenceRecord> analyze_text(std::string_view text, const StopwordSet& stopwords) {
  std::vector<SentenceRecord> out;
  for (const auto& s : segment_sentences(text)) {
    auto rec = preprocess(s, stopwords);
    rec.sent_idx = static_cast<int>(out.size());
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace pseval
