#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "pseval/embed.hpp"

using json = nlohmann::json;

namespace pseval {

std::string UnitKey::str() const { return topic_id + "/" + unit_id + "/" + std::to_string(sent_idx); }

EmbeddingStore::EmbeddingStore(int dimension, bool include_stopwords)
    : dimension_(dimension), include_stopwords_(include_stopwords) {
  if (dimension < 1) throw ValidationError("embedding dimension must be positive");
}

void EmbeddingStore::insert(UnitKey key, SentenceEmbedding value) {
  if (value.sentence.size() != dimension_)
    throw ValidationError(key.str() + ": sentence vector has " + std::to_string(value.sentence.size()) +
                          " components, expected " + std::to_string(dimension_));
  if (value.tokens.cols() > 0 && value.tokens.rows() != dimension_)
    throw ValidationError(key.str() + ": token vectors have wrong dimension");
  if (static_cast<std::size_t>(value.tokens.cols()) != value.surfaces.size())
    throw ValidationError(key.str() + ": token vector count differs from token count");
  if (!value.sentence.allFinite() || !value.tokens.allFinite())
    throw ValidationError(key.str() + ": non-finite vector component");
  if (value.tokens.cols() == 0) value.tokens.resize(dimension_, 0);
  const auto label = key.str();
  if (!entries_.emplace(std::move(key), std::move(value)).second)
    throw ValidationError("duplicate embedding record " + label);
}

const SentenceEmbedding* EmbeddingStore::find(const UnitKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const SentenceEmbedding& EmbeddingStore::at(const UnitKey& key) const {
  if (const auto* e = find(key)) return *e;
  throw CoverageError("no embedding for " + key.str(), {key.str()});
}

const SentenceEmbedding& EmbeddingStore::at(std::string_view topic_id, std::string_view unit_id,
                                            int sent_idx) const {
  return at(UnitKey{std::string(topic_id), std::string(unit_id), sent_idx});
}

std::vector<const TokenRecord*> retained_tokens(const SentenceRecord& s, bool include_stopwords) {
  std::vector<const TokenRecord*> out;
  for (const auto& t : s.tokens)
    if (include_stopwords || !t.is_stopword) out.push_back(&t);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Eigen::VectorXd fallback_encode(std::string_view stem, int dimension, std::uint64_t seed) {
  if (dimension < 2) throw ValidationError("fallback encoder needs dimension >= 2");
  std::mt19937_64 gen(fnv1a64(stem) ^ seed);
  auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  Eigen::VectorXd v(dimension);
  int filled = 0;
  while (filled < dimension) {
    double a = 0.0, b = 0.0, r2 = 0.0;
    do {
      a = 2.0 * uniform() - 1.0;
      b = 2.0 * uniform() - 1.0;
      r2 = a * a + b * b;
    } while (r2 >= 1.0 || r2 == 0.0);
    const double f = std::sqrt(-2.0 * std::log(r2) / r2);
    v[filled++] = a * f;
    if (filled < dimension) v[filled++] = b * f;
  }
  return v / v.norm();
}

Eigen::VectorXd fallback_encode(const TokenRecord& token, int dimension, std::uint64_t seed) {
  return fallback_encode(token.stem, dimension, seed);
}

void encode_fallback_into(EmbeddingStore& store, const Topic& topic, const FallbackConfig& config) {
  auto add = [&](const std::string& unit_id, const SentenceRecord& s) {
    const auto kept = retained_tokens(s, config.include_stopwords);
    SentenceEmbedding e;
    e.tokens.resize(config.dimension, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
      e.tokens.col(static_cast<Eigen::Index>(i)) = fallback_encode(*kept[i], config.dimension, config.seed);
      e.surfaces.push_back(kept[i]->surface);
    }
    if (kept.empty()) {
      std::string lowered;
      for (char c : s.raw_text) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      e.sentence = fallback_encode(lowered, config.dimension, config.seed);
    } else {
      e.sentence = mean_pool(e.tokens);
    }
    store.insert(UnitKey{topic.topic_id, unit_id, s.sent_idx}, std::move(e));
  };
  for (const auto& d : topic.documents)
    for (const auto& s : d.sentences) add(d.doc_id, s);
  for (const auto& sum : topic.summaries)
    for (const auto& s : sum.sentences) add(sum.summary_id, s);
}

EmbeddingStore encode_fallback(const std::vector<Topic>& corpus, const FallbackConfig& config) {
  EmbeddingStore store(config.dimension, config.include_stopwords);
  for (const auto& t : corpus) encode_fallback_into(store, t, config);
  return store;
}

namespace {

Eigen::MatrixXd stack_columns(const std::vector<Eigen::VectorXd>& vs) {
  if (vs.empty()) throw DegenerateInputError("cannot pool an empty list of vectors");
  Eigen::MatrixXd m(vs.front().size(), static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i].size() != m.rows()) throw ValidationError("pooled vectors differ in dimension");
    m.col(static_cast<Eigen::Index>(i)) = vs[i];
  }
  return m;
}

}  // namespace

Eigen::VectorXd pool_sentence(const std::vector<Eigen::VectorXd>& token_vectors) {
  return mean_pool(stack_columns(token_vectors));
}

Eigen::VectorXd pool_document(const std::vector<Eigen::VectorXd>& sentence_vectors) {
  return mean_pool(stack_columns(sentence_vectors));
}

IdfTable::IdfTable(std::map<std::string, int, std::less<>> doc_freq, int n_units)
    : doc_freq_(std::move(doc_freq)), n_units_(n_units) {
  for (const auto& [stem, df] : doc_freq_)
    if (df < 0 || df > n_units_) throw ValidationError("document frequency of '" + stem + "' out of range");
}

int IdfTable::doc_freq(std::string_view stem) const {
  auto it = doc_freq_.find(stem);
  return it == doc_freq_.end() ? 0 : it->second;
}

double IdfTable::idf(std::string_view stem) const {
  return std::log((n_units_ + 1.0) / (doc_freq(stem) + 1.0)) + 1.0;
}

IdfTable build_idf(const Topic& topic) {
  std::map<std::string, int, std::less<>> df;
  int units = 0;
  for (const auto& d : topic.documents) {
    for (const auto& s : d.sentences) {
      ++units;
      std::set<std::string_view> seen;
      for (const auto& t : s.tokens) seen.insert(t.stem);
      for (auto stem : seen) ++df[std::string(stem)];
    }
  }
  return IdfTable(std::move(df), units);
}

namespace {

Eigen::VectorXd parse_vector(const json& arr, int dim, const std::string& file, std::size_t line,
                             const char* what) {
  if (!arr.is_array()) throw ParseError(file, line, std::string(what) + " must be an array");
  if (static_cast<int>(arr.size()) != dim)
    throw ValidationError(file + ":" + std::to_string(line) + ": " + what + " has " + std::to_string(arr.size()) +
                          " components, dim is " + std::to_string(dim));
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) {
    const auto& x = arr[static_cast<std::size_t>(i)];
    if (!x.is_number()) throw ParseError(file, line, std::string(what) + " holds a non-number");
    v[i] = x.get<double>();
  }
  if (!v.allFinite()) throw ValidationError(file + ":" + std::to_string(line) + ": non-finite component");
  return v;
}

const SentenceRecord* find_sentence(const Topic& t, const std::string& unit_id, int sent_idx) {
  auto pick = [&](const std::vector<SentenceRecord>& ss) -> const SentenceRecord* {
    if (sent_idx < 0 || static_cast<std::size_t>(sent_idx) >= ss.size()) return nullptr;
    return &ss[static_cast<std::size_t>(sent_idx)];
  };
  for (const auto& d : t.documents)
    if (d.doc_id == unit_id) return pick(d.sentences);
  for (const auto& s : t.summaries)
    if (s.summary_id == unit_id) return pick(s.sentences);
  return nullptr;
}

}  // namespace

EmbeddingStore read_embeddings(std::istream& in, const std::string& source_name, const std::vector<Topic>& corpus,
                               const EmbeddingLoadOptions& options) {
  std::map<std::string, const Topic*, std::less<>> topics;
  for (const auto& t : corpus) topics.emplace(t.topic_id, &t);

  std::optional<EmbeddingStore> store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, lineno, std::string("malformed JSON: ") + e.what());
    }
    for (const char* k : {"topic_id", "unit_id", "sent_idx", "dim", "sentence_vector", "tokens", "token_vectors"})
      if (!rec.contains(k)) throw ParseError(source_name, lineno, std::string("missing field '") + k + "'");
    if (!rec["topic_id"].is_string() || !rec["unit_id"].is_string() || !rec["sent_idx"].is_number_integer() ||
        !rec["dim"].is_number_integer() || !rec["tokens"].is_array() || !rec["token_vectors"].is_array())
      throw ParseError(source_name, lineno, "field has the wrong JSON type");

    const int dim = rec["dim"].get<int>();
    if (!store) {
      if (dim < 1) throw ValidationError(source_name + ":" + std::to_string(lineno) + ": dim must be positive");
      store.emplace(dim, options.include_stopwords);
    } else if (dim != store->dimension()) {
      throw ValidationError(source_name + ":" + std::to_string(lineno) + ": dim " + std::to_string(dim) +
                            " differs from " + std::to_string(store->dimension()));
    }

    UnitKey key{rec["topic_id"].get<std::string>(), rec["unit_id"].get<std::string>(), rec["sent_idx"].get<int>()};
    SentenceEmbedding e;
    e.sentence = parse_vector(rec["sentence_vector"], dim, source_name, lineno, "sentence_vector");
    for (const auto& tok : rec["tokens"]) {
      if (!tok.is_string()) throw ParseError(source_name, lineno, "tokens must be strings");
      e.surfaces.push_back(tok.get<std::string>());
    }
    const auto& tv = rec["token_vectors"];
    if (tv.size() != e.surfaces.size())
      throw ValidationError(source_name + ":" + std::to_string(lineno) + ": " + std::to_string(e.surfaces.size()) +
                            " tokens but " + std::to_string(tv.size()) + " token vectors");
    e.tokens.resize(dim, static_cast<Eigen::Index>(tv.size()));
    for (std::size_t i = 0; i < tv.size(); ++i)
      e.tokens.col(static_cast<Eigen::Index>(i)) = parse_vector(tv[i], dim, source_name, lineno, "token vector");

    auto topic_it = topics.find(key.topic_id);
    const SentenceRecord* sent =
        topic_it == topics.end() ? nullptr : find_sentence(*topic_it->second, key.unit_id, key.sent_idx);
    if (!sent)
      throw ValidationError(source_name + ":" + std::to_string(lineno) + ": record " + key.str() +
                            " does not match any corpus sentence");
    const auto expected = retained_tokens(*sent, options.include_stopwords);
    bool aligned = expected.size() == e.surfaces.size();
    for (std::size_t i = 0; aligned && i < expected.size(); ++i) aligned = expected[i]->surface == e.surfaces[i];
    if (!aligned)
      throw ValidationError(source_name + ":" + std::to_string(lineno) + ": tokens of " + key.str() +
                            " do not align with the corpus tokenization (" + std::to_string(expected.size()) +
                            " expected, " + std::to_string(e.surfaces.size()) + " given)");
    store->insert(std::move(key), std::move(e));
  }

  if (!store) {
    // An empty file is only valid for a corpus without sentences.
    store.emplace(1, options.include_stopwords);
  }
  std::vector<std::string> missing;
  std::size_t missing_total = 0;
  auto check = [&](const std::string& topic_id, const std::string& unit_id, const SentenceRecord& s) {
    if (!store->find(UnitKey{topic_id, unit_id, s.sent_idx})) {
      ++missing_total;
      if (missing.size() < 10) missing.push_back(topic_id + "/" + unit_id + "/" + std::to_string(s.sent_idx));
    }
  };
  for (const auto& t : corpus) {
    for (const auto& d : t.documents)
      for (const auto& s : d.sentences) check(t.topic_id, d.doc_id, s);
    for (const auto& sum : t.summaries)
      for (const auto& s : sum.sentences) check(t.topic_id, sum.summary_id, s);
  }
  if (missing_total > 0) {
    std::string msg = source_name + ": " + std::to_string(missing_total) + " corpus sentences lack embeddings:";
    for (const auto& m : missing) msg += " " + m;
    throw CoverageError(msg, std::move(missing));
  }
  return std::move(*store);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, const std::vector<Topic>& corpus,
                               const EmbeddingLoadOptions& options) {
  if (!std::filesystem::exists(path)) throw IoError("embedding file does not exist: " + path.string());
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_embeddings(in, path.string(), corpus, options);
}

void write_embeddings(std::ostream& out, const EmbeddingStore& store, const std::vector<Topic>& corpus) {
  auto emit = [&](const std::string& topic_id, const std::string& unit_id, const SentenceRecord& s) {
    const auto& e = store.at(topic_id, unit_id, s.sent_idx);
    json rec;
    rec["topic_id"] = topic_id;
    rec["unit_id"] = unit_id;
    rec["sent_idx"] = s.sent_idx;
    rec["dim"] = store.dimension();
    rec["sentence_vector"] = std::vector<double>(e.sentence.data(), e.sentence.data() + e.sentence.size());
    rec["tokens"] = e.surfaces;
    json tv = json::array();
    for (Eigen::Index c = 0; c < e.tokens.cols(); ++c) {
      const Eigen::VectorXd col = e.tokens.col(c);
      tv.push_back(std::vector<double>(col.data(), col.data() + col.size()));
    }
    rec["token_vectors"] = std::move(tv);
    out << rec.dump() << '\n';
  };
  for (const auto& t : corpus) {
    for (const auto& d : t.documents)
      for (const auto& s : d.sentences) emit(t.topic_id, d.doc_id, s);
    for (const auto& sum : t.summaries)
      for (const auto& s : sum.sentences) emit(t.topic_id, sum.summary_id, s);
  }
}

}  // namespace pseval
