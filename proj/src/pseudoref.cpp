#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pseval/pseudoref.hpp"
#include "pseval/random.hpp"

using json = nlohmann::json;

namespace pseval {

namespace {

const char* kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::random_n: return "random_n";
    case StrategyKind::top_n: return "top_n";
    case StrategyKind::slr: return "slr";
    case StrategyKind::sc: return "sc";
    case StrategyKind::sps: return "sps";
    case StrategyKind::tc: return "tc";
  }
  return "?";
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

// Every source sentence of a topic in (document order, position) order.
struct FlatSentences {
  std::vector<SentenceRef> refs;
  std::vector<int> doc_of;               // document index of each flat sentence
  std::vector<std::size_t> doc_offset;   // first flat index of each document

  explicit FlatSentences(const Topic& topic) {
    for (std::size_t d = 0; d < topic.documents.size(); ++d) {
      doc_offset.push_back(refs.size());
      for (const auto& s : topic.documents[d].sentences) {
        refs.push_back(SentenceRef{topic.documents[d].doc_id, s.sent_idx});
        doc_of.push_back(static_cast<int>(d));
      }
    }
    doc_offset.push_back(refs.size());
  }
};

Eigen::MatrixXd sentence_vectors(const Topic& topic, const EmbeddingStore& store,
                                 const std::vector<SentenceRef>& refs) {
  Eigen::MatrixXd m(store.dimension(), static_cast<Eigen::Index>(refs.size()));
  for (std::size_t i = 0; i < refs.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = store.at(topic.topic_id, refs[i].doc_id, refs[i].sent_idx).sentence;
  return m;
}

// Exemplars minus any whose vector repeats an earlier exemplar's exactly.
// Message passing can settle with every copy of a duplicated sentence as
// its own exemplar; the reference should hold the sentence once.
std::vector<int> distinct_exemplars(const Eigen::MatrixXd& vectors, const Clustering& clustering) {
  std::vector<int> out;
  for (int e : clustering.exemplars) {
    const bool repeat = std::any_of(out.begin(), out.end(), [&](int k) { return vectors.col(k) == vectors.col(e); });
    if (!repeat) out.push_back(e);
  }
  return out;
}

// Indices of the `count` highest scores; ties go to the lower index.
std::vector<std::size_t> top_indices(const Eigen::VectorXd& scores, std::size_t count) {
  std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });
  order.resize(std::min(count, order.size()));
  return order;
}

PseudoReference finish(const Topic& topic, const FlatSentences& flat, std::vector<std::size_t> chosen,
                       StrategySpec spec) {
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  PseudoReference ref{topic.topic_id, {}, std::move(spec)};
  for (auto i : chosen) ref.picks.push_back(flat.refs[i]);
  return ref;
}

std::vector<SentenceRef> doc_refs(const FlatSentences& flat, std::size_t d) {
  return {flat.refs.begin() + static_cast<std::ptrdiff_t>(flat.doc_offset[d]),
          flat.refs.begin() + static_cast<std::ptrdiff_t>(flat.doc_offset[d + 1])};
}

}  // namespace

void StrategySpec::validate() const {
  switch (kind) {
    case StrategyKind::random_n:
    case StrategyKind::top_n:
      if (n < 1) throw ValidationError("strategy " + name() + ": n must be >= 1");
      break;
    case StrategyKind::slr:
    case StrategyKind::sps:
      if (k < 1 || m < 1) throw ValidationError("strategy " + name() + ": k and m must be >= 1");
      break;
    case StrategyKind::sc:
      break;
    case StrategyKind::tc:
      if (n < 1) throw ValidationError("strategy " + name() + ": n must be >= 1");
      if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("strategy " + name() + ": threshold must be in (0, 1)");
      break;
  }
}

std::string StrategySpec::name() const {
  std::string s = kind_name(kind);
  const char* sc = scope == GraphScope::individual ? ":individual" : ":global";
  switch (kind) {
    case StrategyKind::random_n:
      s += ":n=" + std::to_string(n);
      if (seed) s += ":seed=" + std::to_string(*seed);
      break;
    case StrategyKind::top_n:
      s += ":n=" + std::to_string(n);
      break;
    case StrategyKind::slr:
    case StrategyKind::sps:
      s += sc;
      s += scope == GraphScope::individual ? ":k=" + std::to_string(k) : ":m=" + std::to_string(m);
      break;
    case StrategyKind::sc:
      s += sc;
      break;
    case StrategyKind::tc:
      s += ":n=" + std::to_string(n) + ":threshold=" + format_double(threshold);
      if (clique_mode == CliqueMode::components) s += ":components";
      break;
  }
  return s;
}

StrategySpec parse_strategy(const std::string& text) {
  StrategySpec spec;
  auto fail = [&]() -> StrategySpec { throw ValidationError("unknown pseudo-reference strategy '" + text + "'"); };
  auto parse_int = [&](const std::string& v) {
    std::size_t used = 0;
    int x = 0;
    try {
      x = std::stoi(v, &used);
    } catch (const std::exception&) {
      fail();
    }
    if (used != v.size()) fail();
    return x;
  };

  // Short forms.
  if (text.rfind("top", 0) == 0 && text.size() > 3 && std::isdigit(static_cast<unsigned char>(text[3]))) {
    spec.kind = StrategyKind::top_n;
    spec.n = parse_int(text.substr(3));
    spec.validate();
    return spec;
  }
  if (text.rfind("random", 0) == 0 && text.size() > 6 && std::isdigit(static_cast<unsigned char>(text[6]))) {
    spec.kind = StrategyKind::random_n;
    spec.n = parse_int(text.substr(6));
    spec.validate();
    return spec;
  }
  static const std::vector<std::pair<std::string, std::pair<StrategyKind, GraphScope>>> shorts{
      {"slr_i", {StrategyKind::slr, GraphScope::individual}}, {"slr_g", {StrategyKind::slr, GraphScope::global}},
      {"sc_i", {StrategyKind::sc, GraphScope::individual}},   {"sc_g", {StrategyKind::sc, GraphScope::global}},
      {"sps_i", {StrategyKind::sps, GraphScope::individual}}, {"sps_g", {StrategyKind::sps, GraphScope::global}},
      {"tc", {StrategyKind::tc, GraphScope::individual}},
  };
  for (const auto& [alias, ks] : shorts) {
    if (text == alias) {
      spec.kind = ks.first;
      spec.scope = ks.second;
      return spec;
    }
  }

  // Canonical form: kind[:scope][:key=value]...
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty()) fail();
  const std::vector<std::pair<std::string, StrategyKind>> kinds{
      {"random_n", StrategyKind::random_n}, {"top_n", StrategyKind::top_n}, {"slr", StrategyKind::slr},
      {"sc", StrategyKind::sc},             {"sps", StrategyKind::sps},     {"tc", StrategyKind::tc}};
  bool found = false;
  for (const auto& [name, kind] : kinds) {
    if (parts[0] == name) {
      spec.kind = kind;
      found = true;
    }
  }
  if (!found) fail();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p == "individual") spec.scope = GraphScope::individual;
    else if (p == "global") spec.scope = GraphScope::global;
    else if (p == "components") spec.clique_mode = CliqueMode::components;
    else if (p == "maximal") spec.clique_mode = CliqueMode::maximal;
    else {
      const auto eq = p.find('=');
      if (eq == std::string::npos) fail();
      const auto key = p.substr(0, eq);
      const auto val = p.substr(eq + 1);
      if (key == "n") spec.n = parse_int(val);
      else if (key == "k") spec.k = parse_int(val);
      else if (key == "m") spec.m = parse_int(val);
      else if (key == "seed") spec.seed = static_cast<std::uint64_t>(std::stoull(val));
      else if (key == "threshold") spec.threshold = std::stod(val);
      else fail();
    }
  }
  spec.validate();
  return spec;
}

PseudoReference build_random(const Topic& topic, int n, std::uint64_t seed) {
  StrategySpec spec;
  spec.kind = StrategyKind::random_n;
  spec.n = n;
  spec.seed = seed;
  spec.validate();
  const FlatSentences flat(topic);
  Rng rng(seed ^ fnv1a64(topic.topic_id));
  std::vector<std::size_t> chosen;
  for (std::size_t d = 0; d < topic.documents.size(); ++d) {
    std::vector<std::size_t> idx(flat.doc_offset[d + 1] - flat.doc_offset[d]);
    std::iota(idx.begin(), idx.end(), flat.doc_offset[d]);
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n), idx.size());
    for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return finish(topic, flat, std::move(chosen), spec);
}

PseudoReference build_top_n(const Topic& topic, int n) {
  StrategySpec spec;
  spec.kind = StrategyKind::top_n;
  spec.n = n;
  spec.validate();
  const FlatSentences flat(topic);
  std::vector<std::size_t> chosen;
  for (std::size_t d = 0; d < topic.documents.size(); ++d) {
    const std::size_t end = std::min(flat.doc_offset[d] + static_cast<std::size_t>(n), flat.doc_offset[d + 1]);
    for (std::size_t i = flat.doc_offset[d]; i < end; ++i) chosen.push_back(i);
  }
  return finish(topic, flat, std::move(chosen), spec);
}

PseudoReference build_lexrank(const Topic& topic, const EmbeddingStore& store, GraphScope scope, int k, int m,
                              const LexRankOptions& options) {
  StrategySpec spec;
  spec.kind = StrategyKind::slr;
  spec.scope = scope;
  spec.k = k;
  spec.m = m;
  spec.lexrank = options;
  spec.validate();
  const FlatSentences flat(topic);
  std::vector<std::size_t> chosen;
  if (scope == GraphScope::individual) {
    for (std::size_t d = 0; d < topic.documents.size(); ++d) {
      const auto refs = doc_refs(flat, d);
      if (refs.empty()) continue;
      const auto sim = similarity_matrix(sentence_vectors(topic, store, refs));
      const auto ranked = lexrank(sim, options);
      for (auto i : top_indices(ranked.scores, static_cast<std::size_t>(k))) chosen.push_back(flat.doc_offset[d] + i);
    }
  } else if (!flat.refs.empty()) {
    const auto sim = similarity_matrix(sentence_vectors(topic, store, flat.refs));
    chosen = top_indices(lexrank(sim, options).scores, static_cast<std::size_t>(m));
  }
  return finish(topic, flat, std::move(chosen), spec);
}

PseudoReference build_affinity(const Topic& topic, const EmbeddingStore& store, GraphScope scope,
                               const AffinityOptions& options) {
  StrategySpec spec;
  spec.kind = StrategyKind::sc;
  spec.scope = scope;
  spec.affinity = options;
  const FlatSentences flat(topic);
  std::vector<std::size_t> chosen;
  if (scope == GraphScope::individual) {
    for (std::size_t d = 0; d < topic.documents.size(); ++d) {
      const auto refs = doc_refs(flat, d);
      if (refs.empty()) continue;
      const auto vectors = sentence_vectors(topic, store, refs);
      for (int e : distinct_exemplars(vectors, affinity_propagation(similarity_matrix(vectors), options)))
        chosen.push_back(flat.doc_offset[d] + static_cast<std::size_t>(e));
    }
  } else if (!flat.refs.empty()) {
    const auto vectors = sentence_vectors(topic, store, flat.refs);
    for (int e : distinct_exemplars(vectors, affinity_propagation(similarity_matrix(vectors), options)))
      chosen.push_back(static_cast<std::size_t>(e));
  }
  return finish(topic, flat, std::move(chosen), spec);
}

PseudoReference build_pacsum(const Topic& topic, const EmbeddingStore& store, GraphScope scope, int k, int m,
                             const PacSumOptions& options) {
  StrategySpec spec;
  spec.kind = StrategyKind::sps;
  spec.scope = scope;
  spec.k = k;
  spec.m = m;
  spec.pacsum = options;
  spec.validate();
  const FlatSentences flat(topic);
  // Positional scores are always computed within a document; the global
  // variant only differs in ranking all of them jointly.
  Eigen::VectorXd all = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flat.refs.size()));
  std::vector<std::size_t> chosen;
  for (std::size_t d = 0; d < topic.documents.size(); ++d) {
    const auto refs = doc_refs(flat, d);
    if (refs.empty()) continue;
    const auto scores = pacsum_scores(similarity_matrix(sentence_vectors(topic, store, refs)), options).scores;
    all.segment(static_cast<Eigen::Index>(flat.doc_offset[d]), scores.size()) = scores;
    if (scope == GraphScope::individual)
      for (auto i : top_indices(scores, static_cast<std::size_t>(k))) chosen.push_back(flat.doc_offset[d] + i);
  }
  if (scope == GraphScope::global) chosen = top_indices(all, static_cast<std::size_t>(m));
  return finish(topic, flat, std::move(chosen), spec);
}

PseudoReference build_top_clique(const Topic& topic, const EmbeddingStore& store, int n, double threshold,
                                 CliqueMode mode) {
  StrategySpec spec;
  spec.kind = StrategyKind::tc;
  spec.n = n;
  spec.threshold = threshold;
  spec.clique_mode = mode;
  spec.validate();
  const FlatSentences flat(topic);

  // (i) lead sentences of every document are salient.
  std::vector<std::size_t> top, rest;
  for (std::size_t d = 0; d < topic.documents.size(); ++d)
    for (std::size_t i = flat.doc_offset[d]; i < flat.doc_offset[d + 1]; ++i)
      (i - flat.doc_offset[d] < static_cast<std::size_t>(n) ? top : rest).push_back(i);
  std::vector<std::size_t> chosen = top;
  if (rest.empty() || flat.refs.empty()) return finish(topic, flat, std::move(chosen), spec);

  const auto sim = similarity_matrix(sentence_vectors(topic, store, flat.refs)).values();
  const auto nr = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXd rest_sim(nr, nr);
  for (Eigen::Index a = 0; a < nr; ++a)
    for (Eigen::Index b = 0; b < nr; ++b)
      rest_sim(a, b) = sim(static_cast<Eigen::Index>(rest[static_cast<std::size_t>(a)]),
                           static_cast<Eigen::Index>(rest[static_cast<std::size_t>(b)]));

  // (ii) graph of highly similar non-lead sentences; (iii) clique centers.
  const auto graph = threshold_graph(rest_sim, threshold);
  const auto cover = mode == CliqueMode::maximal ? maximal_cliques(graph) : connected_components(graph);
  std::set<std::size_t> potential;
  for (const auto& clique : cover.cliques) {
    int center = clique.front();
    double best = -std::numeric_limits<double>::infinity();
    for (int a : clique) {
      double total = 0.0;
      for (int b : clique)
        if (a != b) total += rest_sim(a, b);
      const double avg = total / static_cast<double>(clique.size() - 1);
      if (avg > best) {
        best = avg;
        center = a;
      }
    }
    potential.insert(rest[static_cast<std::size_t>(center)]);
  }

  // (iv) keep a candidate only if it is not highly similar to any lead sentence.
  for (auto cand : potential) {
    bool redundant = false;
    for (auto t : top) {
      if (sim(static_cast<Eigen::Index>(cand), static_cast<Eigen::Index>(t)) >= threshold) {
        redundant = true;
        break;
      }
    }
    if (!redundant) chosen.push_back(cand);
  }
  return finish(topic, flat, std::move(chosen), spec);
}

PseudoReference build_pseudo_reference(const Topic& topic, const EmbeddingStore* store, const StrategySpec& spec,
                                       std::uint64_t fallback_seed) {
  spec.validate();
  if (spec.needs_embeddings() && store == nullptr)
    throw ValidationError("strategy " + spec.name() + " needs sentence embeddings");
  PseudoReference ref;
  switch (spec.kind) {
    case StrategyKind::random_n: ref = build_random(topic, spec.n, spec.seed.value_or(fallback_seed)); break;
    case StrategyKind::top_n: ref = build_top_n(topic, spec.n); break;
    case StrategyKind::slr: ref = build_lexrank(topic, *store, spec.scope, spec.k, spec.m, spec.lexrank); break;
    case StrategyKind::sc: ref = build_affinity(topic, *store, spec.scope, spec.affinity); break;
    case StrategyKind::sps: ref = build_pacsum(topic, *store, spec.scope, spec.k, spec.m, spec.pacsum); break;
    case StrategyKind::tc:
      ref = build_top_clique(topic, *store, spec.n, spec.threshold, spec.clique_mode);
      break;
  }
  return ref;
}

void validate_pseudo_reference(const PseudoReference& ref, const Topic& topic) {
  if (ref.topic_id != topic.topic_id) throw ValidationError("pseudo reference belongs to another topic");
  std::pair<int, int> prev{-1, -1};
  for (const auto& p : ref.picks) {
    const int d = topic.document_index(p.doc_id);
    if (d < 0 || p.sent_idx < 0 ||
        static_cast<std::size_t>(p.sent_idx) >= topic.documents[static_cast<std::size_t>(d)].sentences.size())
      throw ValidationError("pick " + p.doc_id + "/" + std::to_string(p.sent_idx) + " is not in topic " +
                            topic.topic_id);
    const std::pair<int, int> cur{d, p.sent_idx};
    if (cur <= prev) throw ValidationError("picks are duplicated or not in document order");
    prev = cur;
  }
}

void write_pseudo_references(std::ostream& out, const std::vector<PseudoReference>& refs) {
  for (const auto& r : refs) {
    json picks = json::array();
    for (const auto& p : r.picks) picks.push_back(json::array({p.doc_id, p.sent_idx}));
    out << json{{"topic_id", r.topic_id}, {"strategy", r.strategy.name()}, {"picks", picks}}.dump() << '\n';
  }
}

std::vector<PseudoReference> read_pseudo_references(std::istream& in, const std::string& source_name) {
  std::vector<PseudoReference> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      PseudoReference r;
      r.topic_id = obj.at("topic_id").get<std::string>();
      r.strategy = parse_strategy(obj.at("strategy").get<std::string>());
      for (const auto& p : obj.at("picks")) r.picks.push_back(SentenceRef{p.at(0).get<std::string>(), p.at(1).get<int>()});
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(source_name, lineno, e.what());
    }
  }
  return out;
}

}  // namespace pseval
