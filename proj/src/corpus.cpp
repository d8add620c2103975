#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pseval/corpus.hpp"
#include "pseval/error.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace pseval {

int CandidateSummary::word_count() const {
  int n = 0;
  for (const auto& s : sentences) n += s.word_count;
  return n;
}

int Topic::document_index(std::string_view doc_id) const {
  for (std::size_t i = 0; i < documents.size(); ++i)
    if (documents[i].doc_id == doc_id) return static_cast<int>(i);
  return -1;
}

const SentenceRecord& Topic::sentence(std::string_view doc_id, int sent_idx) const {
  const int d = document_index(doc_id);
  if (d < 0) throw ValidationError("topic " + topic_id + " has no document " + std::string(doc_id));
  const auto& sents = documents[static_cast<std::size_t>(d)].sentences;
  if (sent_idx < 0 || static_cast<std::size_t>(sent_idx) >= sents.size())
    throw ValidationError("document " + std::string(doc_id) + " has no sentence " + std::to_string(sent_idx));
  return sents[static_cast<std::size_t>(sent_idx)];
}

std::size_t Topic::source_sentence_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.sentences.size();
  return n;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "plain_dirs") return CorpusFormat::plain_dirs;
  if (name == "jsonl") return CorpusFormat::jsonl;
  throw ValidationError("unknown corpus format '" + std::string(name) + "'");
}

void validate_topic(const Topic& topic) {
  if (topic.topic_id.empty()) throw ValidationError("topic with empty topic_id");
  if (topic.documents.empty()) throw ValidationError("topic " + topic.topic_id + " has no documents");
  std::set<std::string> units;
  for (const auto& d : topic.documents) {
    if (!units.insert(d.doc_id).second)
      throw ValidationError("topic " + topic.topic_id + ": duplicate doc_id " + d.doc_id);
    for (std::size_t i = 0; i < d.sentences.size(); ++i)
      if (d.sentences[i].sent_idx != static_cast<int>(i))
        throw ValidationError("document " + d.doc_id + ": sentence indices are not contiguous");
  }
  for (const auto& s : topic.summaries) {
    if (!units.insert(s.summary_id).second)
      throw ValidationError("topic " + topic.topic_id + ": duplicate summary_id " + s.summary_id +
                            " (ids must be unique across documents and summaries)");
  }
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void sort_topic(Topic& t) {
  std::sort(t.documents.begin(), t.documents.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  std::sort(t.summaries.begin(), t.summaries.end(),
            [](const CandidateSummary& a, const CandidateSummary& b) { return a.summary_id < b.summary_id; });
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool want_dirs) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (want_dirs ? e.is_directory() : (e.is_regular_file() && e.path().extension() == ".txt"))
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, double> read_ratings(const fs::path& p) {
  std::map<std::string, double> out;
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(p.string(), lineno, "expected 'summary_id<TAB>rating'");
    const std::string id = line.substr(0, tab);
    const std::string value = line.substr(tab + 1);
    double rating = 0.0;
    std::size_t used = 0;
    try {
      rating = std::stod(value, &used);
    } catch (const std::exception&) {
      throw ParseError(p.string(), lineno, "rating '" + value + "' is not a decimal number");
    }
    if (used != value.size()) throw ParseError(p.string(), lineno, "trailing characters after rating");
    if (!out.emplace(id, rating).second) throw ParseError(p.string(), lineno, "duplicate rating for " + id);
  }
  return out;
}

std::vector<Topic> load_plain_dirs(const fs::path& root, const StopwordSet& stopwords) {
  std::vector<Topic> topics;
  for (const auto& topic_dir : sorted_entries(root, true)) {
    Topic t;
    t.topic_id = topic_dir.filename().string();
    const auto docs_dir = topic_dir / "docs";
    if (!fs::is_directory(docs_dir))
      throw ValidationError("topic " + t.topic_id + " has no docs/ directory");
    for (const auto& f : sorted_entries(docs_dir, false)) {
      Document d;
      d.doc_id = f.stem().string();
      d.sentences = analyze_text(read_file(f), stopwords);
      t.documents.push_back(std::move(d));
    }
    const auto sum_dir = topic_dir / "summaries";
    if (fs::is_directory(sum_dir)) {
      for (const auto& f : sorted_entries(sum_dir, false)) {
        CandidateSummary s;
        s.summary_id = f.stem().string();
        s.text = read_file(f);
        s.sentences = analyze_text(s.text, stopwords);
        t.summaries.push_back(std::move(s));
      }
    }
    const auto ratings_path = topic_dir / "ratings.tsv";
    if (fs::exists(ratings_path)) {
      for (const auto& [id, rating] : read_ratings(ratings_path)) {
        auto it = std::find_if(t.summaries.begin(), t.summaries.end(),
                               [&](const CandidateSummary& s) { return s.summary_id == id; });
        if (it == t.summaries.end())
          throw ValidationError(ratings_path.string() + ": rating for unknown summary " + id);
        it->human_rating = rating;
      }
    }
    sort_topic(t);
    validate_topic(t);
    topics.push_back(std::move(t));
  }
  return topics;
}

const json& require(const json& obj, const char* key, const std::string& file, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(file, line, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& file, std::size_t line) {
  const auto& v = require(obj, key, file, line);
  if (!v.is_string()) throw ParseError(file, line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

std::vector<Topic> read_corpus_jsonl(std::istream& in, const std::string& source_name,
                                     const StopwordSet& stopwords) {
  std::map<std::string, Topic> topics;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(source_name, lineno, "record is not a JSON object");
    const auto topic_id = require_string(obj, "topic_id", source_name, lineno);
    const auto unit_id = require_string(obj, "doc_id", source_name, lineno);
    const auto kind = require_string(obj, "kind", source_name, lineno);
    const auto text = require_string(obj, "text", source_name, lineno);
    if (topic_id.empty() || unit_id.empty()) throw ParseError(source_name, lineno, "empty identifier");

    auto& t = topics[topic_id];
    t.topic_id = topic_id;
    std::optional<double> rating;
    if (auto it = obj.find("rating"); it != obj.end() && !it->is_null()) {
      if (!it->is_number()) throw ParseError(source_name, lineno, "field 'rating' must be a number");
      rating = it->get<double>();
    }
    if (kind == "doc") {
      if (rating) throw ParseError(source_name, lineno, "documents cannot carry a rating");
      for (const auto& d : t.documents)
        if (d.doc_id == unit_id) throw ValidationError(source_name + ":" + std::to_string(lineno) +
                                                       ": duplicate doc_id " + unit_id + " in topic " + topic_id);
      t.documents.push_back(Document{unit_id, analyze_text(text, stopwords)});
    } else if (kind == "summary") {
      for (const auto& s : t.summaries)
        if (s.summary_id == unit_id)
          throw ValidationError(source_name + ":" + std::to_string(lineno) + ": duplicate summary_id " + unit_id +
                                " in topic " + topic_id);
      t.summaries.push_back(CandidateSummary{unit_id, text, analyze_text(text, stopwords), rating});
    } else {
      throw ParseError(source_name, lineno, "kind must be \"doc\" or \"summary\", got \"" + kind + "\"");
    }
  }
  std::vector<Topic> out;
  out.reserve(topics.size());
  for (auto& [id, t] : topics) {
    sort_topic(t);
    validate_topic(t);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Topic> load_corpus(const fs::path& root, CorpusFormat format, const StopwordSet& stopwords) {
  if (!fs::exists(root)) throw IoError("corpus path does not exist: " + root.string());
  if (format == CorpusFormat::plain_dirs) {
    if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
    return load_plain_dirs(root, stopwords);
  }
  if (fs::is_directory(root)) throw IoError("jsonl corpus must be a file: " + root.string());
  std::ifstream in(root);
  if (!in) throw IoError("cannot read " + root.string());
  return read_corpus_jsonl(in, root.string(), stopwords);
}

void write_corpus_jsonl(std::ostream& out, const std::vector<Topic>& corpus) {
  for (const auto& t : corpus) {
    for (const auto& d : t.documents) {
      std::string text;
      for (const auto& s : d.sentences) {
        if (!text.empty()) text += "\n\n";
        text += s.raw_text;
      }
      json obj{{"topic_id", t.topic_id}, {"doc_id", d.doc_id}, {"kind", "doc"}, {"text", text}};
      out << obj.dump() << '\n';
    }
    for (const auto& s : t.summaries) {
      json obj{{"topic_id", t.topic_id}, {"doc_id", s.summary_id}, {"kind", "summary"}, {"text", s.text}};
      if (s.human_rating) obj["rating"] = *s.human_rating;
      out << obj.dump() << '\n';
    }
  }
}

}  // namespace pseval
