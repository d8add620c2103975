#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <tuple>

#include "pseval/scorers.hpp"

namespace pseval {

std::vector<UnitSentence> summary_units(const CandidateSummary& summary) {
  std::vector<UnitSentence> out;
  for (const auto& s : summary.sentences) out.push_back({summary.summary_id, &s});
  return out;
}

std::vector<UnitSentence> selection_units(const Topic& topic, const std::vector<SentenceRef>& picks) {
  std::vector<UnitSentence> out;
  out.reserve(picks.size());
  for (const auto& p : picks) out.push_back({p.doc_id, &topic.sentence(p.doc_id, p.sent_idx)});
  return out;
}

std::vector<UnitSentence> reference_units(const Topic& topic, const PseudoReference& ref) {
  return selection_units(topic, ref.picks);
}

std::vector<UnitSentence> source_units(const Topic& topic) {
  std::vector<UnitSentence> out;
  for (const auto& d : topic.documents)
    for (const auto& s : d.sentences) out.push_back({d.doc_id, &s});
  return out;
}

std::vector<const SentenceRecord*> sentence_ptrs(const std::vector<UnitSentence>& units) {
  std::vector<const SentenceRecord*> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(u.sentence);
  return out;
}

std::vector<const SentenceRecord*> sentence_ptrs(const CandidateSummary& summary) {
  std::vector<const SentenceRecord*> out;
  for (const auto& s : summary.sentences) out.push_back(&s);
  return out;
}

TokenBag make_bag(std::string_view topic_id, const std::vector<UnitSentence>& sentences, const EmbeddingStore& store,
                  const IdfTable* idf, bool filter_stopwords) {
  if (!filter_stopwords && !store.include_stopwords())
    throw ValidationError("stopword tokens were requested but the embedding store has no vectors for them");
  std::vector<std::pair<const std::string*, Eigen::Index>> picks;  // stem, column
  std::vector<const Eigen::MatrixXd*> sources;
  for (const auto& u : sentences) {
    const auto& emb = store.at(topic_id, u.unit_id, u.sentence->sent_idx);
    const auto kept = retained_tokens(*u.sentence, store.include_stopwords());
    for (std::size_t c = 0; c < kept.size(); ++c) {
      if (filter_stopwords && kept[c]->is_stopword) continue;
      picks.emplace_back(&kept[c]->stem, static_cast<Eigen::Index>(c));
      sources.push_back(&emb.tokens);
    }
  }
  if (picks.empty()) throw DegenerateInputError("no content tokens to build a token bag from");

  TokenBag bag;
  const auto n = static_cast<Eigen::Index>(picks.size());
  bag.vectors.resize(store.dimension(), n);
  bag.weights.resize(n);
  bag.stems.reserve(picks.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [stem, col] = picks[static_cast<std::size_t>(i)];
    bag.stems.push_back(*stem);
    bag.vectors.col(i) = sources[static_cast<std::size_t>(i)]->col(col);
    bag.weights(i) = idf ? idf->idf(*stem) : 1.0;
  }
  bag.weights /= bag.weights.sum();
  return bag;
}

WmdMode parse_wmd_mode(std::string_view name) {
  if (name == "exact") return WmdMode::exact;
  if (name == "relaxed") return WmdMode::relaxed;
  if (name == "auto") return WmdMode::auto_select;
  throw ValidationError("unknown WMD mode '" + std::string(name) + "' (expected exact, relaxed or auto)");
}

std::string to_string(WmdMode mode) {
  switch (mode) {
    case WmdMode::exact: return "exact";
    case WmdMode::relaxed: return "relaxed";
    case WmdMode::auto_select: return "auto";
  }
  return "?";
}

double score_summary(const TokenBag* summary, const TokenBag& reference, WmdMode mode, long long exact_cell_limit) {
  if (summary == nullptr || summary->size() == 0) return kWmdSentinel;
  bool exact = mode == WmdMode::exact;
  if (mode == WmdMode::auto_select)
    exact = static_cast<long long>(reference.size()) * static_cast<long long>(summary->size()) <= exact_cell_limit;
  const double d = exact ? exact_wmd(reference, *summary).cost : relaxed_wmd(reference, *summary);
  return -d;
}

SupertScorer::SupertScorer(const Topic& topic, const EmbeddingStore& store, const PseudoReference& ref,
                           const SupertOptions& options)
    : topic_id_(topic.topic_id), store_(&store), idf_(build_idf(topic)), options_(options) {
  reference_ = make_bag(topic_id_, reference_units(topic, ref), store, options_.idf_weights ? &idf_ : nullptr,
                        options_.filter_stopwords);
}

double SupertScorer::score(const CandidateSummary& summary) const { return score(summary_units(summary)); }

double SupertScorer::score(const std::vector<UnitSentence>& summary) const {
  TokenBag bag;
  try {
    bag = make_bag(topic_id_, summary, *store_, options_.idf_weights ? &idf_ : nullptr, options_.filter_stopwords);
  } catch (const DegenerateInputError&) {
    return kWmdSentinel;
  }
  return score_summary(&bag, reference_, options_.mode, options_.exact_cell_limit);
}

double score_cosine_pooled(std::string_view topic_id, const std::vector<UnitSentence>& summary,
                           const std::vector<UnitSentence>& other, const EmbeddingStore& store) {
  if (summary.empty() || other.empty()) return kCosineSentinel;
  auto pooled = [&](const std::vector<UnitSentence>& units) {
    Eigen::MatrixXd cols(store.dimension(), static_cast<Eigen::Index>(units.size()));
    for (std::size_t i = 0; i < units.size(); ++i)
      cols.col(static_cast<Eigen::Index>(i)) = store.at(topic_id, units[i].unit_id, units[i].sentence->sent_idx).sentence;
    return mean_pool(cols);
  };
  try {
    return cosine(pooled(summary), pooled(other));
  } catch (const DegenerateInputError&) {
    return kCosineSentinel;
  }
}

namespace {

using Counts = std::map<std::string, double, std::less<>>;

Counts stem_counts(const std::vector<const SentenceRecord*>& sentences) {
  Counts c;
  for (const auto* s : sentences)
    for (const auto& t : s->tokens)
      if (!t.is_stopword) c[t.stem] += 1.0;
  return c;
}

}  // namespace

SourceStats source_stats(const Topic& topic) { return source_stats(topic, build_idf(topic)); }

SourceStats source_stats(const Topic& topic, const IdfTable& idf) {
  SourceStats st;
  st.idf = idf;
  for (const auto& d : topic.documents)
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens)
        if (!t.is_stopword) st.counts[t.stem] += 1.0;
  for (const auto& [stem, c] : st.counts) st.total += c;
  return st;
}

double score_tfidf(const std::vector<const SentenceRecord*>& summary, const SourceStats& source) {
  const Counts q = stem_counts(summary);
  if (q.empty() || source.counts.empty()) return kTfidfSentinel;
  double dot = 0, nq = 0, np = 0;
  for (const auto& [stem, c] : source.counts) {
    const double w = c * source.idf.idf(stem);
    np += w * w;
  }
  for (const auto& [stem, c] : q) {
    const double idf = source.idf.idf(stem);
    const double w = c * idf;
    nq += w * w;
    if (auto it = source.counts.find(stem); it != source.counts.end()) dot += w * it->second * idf;
  }
  return std::clamp(dot / std::sqrt(np * nq), -1.0, 1.0);
}

double score_tfidf(const CandidateSummary& summary, const Topic& topic) {
  return score_tfidf(sentence_ptrs(summary), source_stats(topic));
}

double js_divergence(const Counts& p, const Counts& q) {
  double tp = 0, tq = 0;
  for (const auto& [k, v] : p) tp += v;
  for (const auto& [k, v] : q) tq += v;
  if (tp <= 0 || tq <= 0) throw DegenerateInputError("JS divergence of an empty distribution");
  // Each term is a * ln(a / m); terms with a == 0 vanish.
  auto term = [](double a, double m) { return a > 0 ? a * std::log(a / m) : 0.0; };
  double js = 0;
  auto ip = p.begin();
  auto iq = q.begin();
  while (ip != p.end() || iq != q.end()) {
    double a = 0, b = 0;
    if (iq == q.end() || (ip != p.end() && ip->first < iq->first)) {
      a = ip++->second / tp;
    } else if (ip == p.end() || iq->first < ip->first) {
      b = iq++->second / tq;
    } else {
      a = ip++->second / tp;
      b = iq++->second / tq;
    }
    const double m = 0.5 * (a + b);
    js += 0.5 * term(a, m) + 0.5 * term(b, m);
  }
  return std::max(js, 0.0);
}

double score_js(const std::vector<const SentenceRecord*>& summary, const SourceStats& source) {
  const Counts q = stem_counts(summary);
  if (q.empty() || source.counts.empty()) return kJsSentinel;
  return -js_divergence(source.counts, q);
}

double score_js(const CandidateSummary& summary, const Topic& topic) {
  return score_js(sentence_ptrs(summary), source_stats(topic));
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_score_tsv(std::ostream& out, std::vector<ScoreRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
    return std::tie(a.topic_id, a.summary_id, a.metric_name) < std::tie(b.topic_id, b.summary_id, b.metric_name);
  });
  out << "topic_id\tsummary_id\tmetric_name\tscore\n";
  for (const auto& r : rows)
    out << r.topic_id << '\t' << r.summary_id << '\t' << r.metric_name << '\t' << format_real(r.score) << '\n';
}

std::vector<ScoreRow> read_score_tsv(std::istream& in, const std::string& source_name) {
  std::vector<ScoreRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("topic_id\t", 0) == 0) continue;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
      f.push_back(line.substr(start, tab - start));
    f.push_back(line.substr(start));
    if (f.size() != 4) throw ParseError(source_name, lineno, "expected 4 tab-separated columns");
    ScoreRow r{f[0], f[1], f[2], 0.0};
    const auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.score);
    if (res.ec != std::errc() || res.ptr != f[3].data() + f[3].size())
      throw ParseError(source_name, lineno, "bad score '" + f[3] + "'");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace pseval
