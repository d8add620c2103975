#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pseval/error.hpp"
#include "pseval/random.hpp"
#include "pseval/synth.hpp"

using json = nlohmann::json;

namespace pseval {

namespace {

class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {}

  // A fresh three-syllable pseudo-word whose stem is not used yet.
  std::string next() {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    for (;;) {
      std::string w;
      for (int s = 0; s < 3; ++s) {
        w += consonants[rng_.below(consonants.size())];
        w += vowels[rng_.below(vowels.size())];
      }
      const std::string stem = porter_stem(w);
      if (default_stopwords().contains(w) || default_abbreviations().contains(w) || stem.empty()) continue;
      if (!stems_.insert(stem).second) continue;
      return w;
    }
  }

  std::vector<std::string> many(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> stems_;
};

// Content words with stopword glue after every second word, capitalized, full stop.
std::string render(const std::vector<std::string>& words) {
  static const std::vector<std::string> glue{"of", "and", "in", "the", "with", "for"};
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += words[i];
    if (i % 2 == 1 && i + 1 < words.size()) s += " " + glue[(i / 2) % glue.size()];
  }
  if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s + ".";
}

std::string id(char prefix, int i) {
  std::string n = std::to_string(i);
  if (n.size() < 2) n.insert(0, 2 - n.size(), '0');
  return std::string(1, prefix) + n;
}

std::string join(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& o) {
  if (o.topics < 1 || o.documents < 1 || o.facts < 1 || o.fact_words < 2 || o.lead > o.facts ||
      o.lead > o.min_sentences || o.min_sentences > o.max_sentences || o.summaries < 1 || o.background_words < 1 ||
      o.unseen_words < 1 || o.filler_words_min < 1 || o.filler_words_min > o.filler_words_max)
    throw ValidationError("inconsistent synthetic corpus options");
  Rng rng(o.seed);
  WordMaker words(rng);
  SyntheticCorpus out;
  std::ostringstream lines;

  auto pick = [&](const std::vector<std::string>& pool) -> const std::string& { return pool[rng.below(pool.size())]; };

  for (int t = 1; t <= o.topics; ++t) {
    const std::string topic_id = id('t', t);
    std::vector<std::vector<std::string>> facts;
    for (int f = 0; f < o.facts; ++f) facts.push_back(words.many(o.fact_words));
    const auto background = words.many(o.background_words);
    const auto unseen = words.many(o.unseen_words);

    for (int d = 1; d <= o.documents; ++d) {
      const int n_sent = o.min_sentences + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.max_sentences - o.min_sentences + 1)));
      std::vector<int> order(static_cast<std::size_t>(o.facts));
      for (int f = 0; f < o.facts; ++f) order[static_cast<std::size_t>(f)] = f;
      rng.shuffle(order);
      std::vector<std::string> sentences;
      for (int l = 0; l < o.lead; ++l) {
        auto w = facts[static_cast<std::size_t>(order[static_cast<std::size_t>(l)])];
        for (auto& x : w)
          if (rng.uniform() < o.lead_noise) x = pick(background);
        sentences.push_back(render(w));
      }
      for (int s = o.lead; s < n_sent; ++s) {
        const int len = o.filler_words_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.filler_words_max - o.filler_words_min + 1)));
        std::vector<std::string> w;
        for (int k = 0; k < len; ++k) w.push_back(pick(background));
        sentences.push_back(render(w));
      }
      lines << json{{"topic_id", topic_id}, {"doc_id", id('d', d)}, {"kind", "doc"}, {"text", join(sentences)}}.dump()
            << '\n';
    }

    std::vector<std::string> ref_sentences;
    for (const auto& f : facts) ref_sentences.push_back(render(f));
    out.references.push_back({topic_id, "ref1", join(ref_sentences)});

    for (int s = 1; s <= o.summaries; ++s) {
      const double fidelity = (s - 1 + rng.uniform()) / o.summaries;
      int kept = 0, total = 0;
      std::vector<std::string> sentences;
      for (auto w : facts) {
        for (auto& x : w) {
          ++total;
          if (rng.uniform() < fidelity) {
            ++kept;
          } else {
            x = rng.uniform() < o.in_source_noise ? pick(background) : pick(unseen);
          }
        }
        sentences.push_back(render(w));
      }
      const double rating = static_cast<double>(kept) / total;
      lines << json{{"topic_id", topic_id}, {"doc_id", id('s', s)}, {"kind", "summary"},
                    {"text", join(sentences)}, {"rating", rating}}.dump()
            << '\n';
    }
  }

  out.corpus_jsonl = lines.str();
  std::istringstream in(out.corpus_jsonl);
  out.topics = read_corpus_jsonl(in, "synthetic");
  return out;
}

void write_references_jsonl(std::ostream& out, const std::vector<ReferenceSummary>& refs) {
  for (const auto& r : refs) out << json{{"topic_id", r.topic_id}, {"ref_id", r.ref_id}, {"text", r.text}}.dump() << '\n';
}

std::vector<ReferenceSummary> read_references_jsonl(std::istream& in, const std::string& source_name) {
  std::vector<ReferenceSummary> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("topic_id").get<std::string>(), j.at("ref_id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(source_name, lineno, e.what());
    }
  }
  return out;
}

std::vector<ReferenceSummary> load_references(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open references file " + path.string());
  return read_references_jsonl(in, path.string());
}

}  // namespace pseval
