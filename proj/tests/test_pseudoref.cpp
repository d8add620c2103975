#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pseval/pseudoref.hpp"

using namespace pseval;
using testing_support::Gen;
using testing_support::make_topic_sentences;
using testing_support::store_with_vectors;

namespace {

// Distinct content words so every sentence has tokens.
std::vector<std::string> sentences(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + "word" + std::string(1, static_cast<char>('a' + i % 26)) + " item" + std::to_string(i));
  return out;
}

Topic sized_topic(const std::vector<int>& lengths) {
  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  for (std::size_t d = 0; d < lengths.size(); ++d)
    docs.push_back({"d" + std::to_string(d), sentences("x", lengths[d])});
  return make_topic_sentences("t", docs);
}

std::set<SentenceRef> as_set(const PseudoReference& r) { return {r.picks.begin(), r.picks.end()}; }

std::vector<StrategySpec> all_strategies(Gen& g) {
  std::vector<StrategySpec> out;
  for (const auto* name : {"random_n:n=3", "top_n:n=2", "slr:individual:k=2", "slr:global:m=5", "sc:individual",
                           "sc:global", "sps:individual:k=2", "sps:global:m=5", "tc:n=1:threshold=0.5",
                           "tc:n=2:threshold=0.3:components"})
    out.push_back(parse_strategy(name));
  out[0].seed = static_cast<std::uint64_t>(g.integer(0, 1000));
  return out;
}

// Random topic with real text so the fallback encoder has overlapping stems.
Topic random_topic(Gen& g, int index) {
  static const std::vector<std::string> vocab{"market", "stocks", "fell", "rose", "bank", "rates", "storm", "coast",
                                              "rain",   "winds",  "the",  "of",   "and",  "city",  "mayor", "vote"};
  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  const int n_docs = g.integer(1, 4);
  for (int d = 0; d < n_docs; ++d) {
    std::vector<std::string> sents;
    const int n_sent = g.integer(1, 9);
    for (int s = 0; s < n_sent; ++s) {
      std::string text;
      const int len = g.integer(1, 7);
      for (int w = 0; w < len; ++w) text += vocab[static_cast<std::size_t>(g.integer(0, static_cast<int>(vocab.size()) - 1))] + " ";
      if (g.coin(0.1)) text = "the of and";
      sents.push_back(text);
    }
    docs.push_back({"d" + std::to_string(d), sents});
  }
  return make_topic_sentences("topic" + std::to_string(index), docs);
}

}  // namespace

TEST(Random, ClampsToDocumentLength) {
  const auto topic = sized_topic({3});
  const auto r = build_random(topic, 5, 0);
  EXPECT_EQ(r.picks.size(), 3u);
  validate_pseudo_reference(r, topic);
}

TEST(Random, DeterministicPerSeed) {
  const auto topic = sized_topic({24, 20, 7});
  EXPECT_EQ(build_random(topic, 5, 42).picks, build_random(topic, 5, 42).picks);
  EXPECT_NE(build_random(topic, 5, 42).picks, build_random(topic, 5, 43).picks);
}

TEST(Random, TenPerDocumentOverTenDocuments) {
  const auto topic = sized_topic(std::vector<int>(10, 24));
  const auto r = build_random(topic, 10, 7);
  EXPECT_EQ(r.picks.size(), 100u);
  validate_pseudo_reference(r, topic);
}

TEST(Random, RoughlyUniform) {
  // Each of 10 sentences drawn with probability 3/10.
  const auto topic = sized_topic({10});
  std::vector<int> hits(10, 0);
  const int trials = 4000;
  for (int s = 0; s < trials; ++s)
    for (const auto& p : build_random(topic, 3, static_cast<std::uint64_t>(s)).picks) ++hits[static_cast<std::size_t>(p.sent_idx)];
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 0.3, 0.04);
}

TEST(TopN, Examples) {
  const auto topic = sized_topic({24, 4, 12});
  const auto r = build_top_n(topic, 10);
  std::vector<SentenceRef> expected;
  for (const auto& [d, len] : std::vector<std::pair<std::string, int>>{{"d0", 10}, {"d1", 4}, {"d2", 10}})
    for (int i = 0; i < len; ++i) expected.push_back({d, i});
  EXPECT_EQ(r.picks, expected);
  const auto lead = build_top_n(topic, 1);
  EXPECT_EQ(lead.picks, (std::vector<SentenceRef>{{"d0", 0}, {"d1", 0}, {"d2", 0}}));
}

TEST(TopN, Monotone) {
  const auto topic = sized_topic({7, 2, 11, 5});
  for (int n = 1; n < 15; ++n) {
    const auto a = as_set(build_top_n(topic, n));
    const auto b = as_set(build_top_n(topic, n + 1));
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST(TopN, DocumentOrderFollowsInput) {
  // Documents stay in input order even when their ids are not sorted.
  auto topic = make_topic_sentences("t", {{"zeta", sentences("a", 2)}, {"alpha", sentences("b", 2)}});
  const auto r = build_top_n(topic, 1);
  EXPECT_EQ(r.picks, (std::vector<SentenceRef>{{"zeta", 0}, {"alpha", 0}}));
  validate_pseudo_reference(r, topic);
}

TEST(LexRankStrategy, IdenticalEmbeddingsPickFirstK) {
  const auto topic = sized_topic({6});
  const auto store = store_with_vectors(topic, Eigen::MatrixXd::Ones(3, 6));
  const auto r = build_lexrank(topic, store, GraphScope::individual, 2);
  EXPECT_EQ(r.picks, (std::vector<SentenceRef>{{"d0", 0}, {"d0", 1}}));
}

TEST(LexRankStrategy, KAtLeastLengthPicksWholeDocument) {
  Gen g(1);
  const auto topic = sized_topic({4, 3});
  const auto store = store_with_vectors(topic, g.gaussian(5, 7));
  const auto r = build_lexrank(topic, store, GraphScope::individual, 10);
  EXPECT_EQ(r.picks.size(), 7u);
}

TEST(LexRankStrategy, TopOneMatchesEigenOracle) {
  Gen g(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto topic = sized_topic({3});
    // Non-negative vectors keep every edge, so the stationary vector has a clear maximum.
    const Eigen::MatrixXd v = g.gaussian(4, 3).cwiseAbs();
    const auto store = store_with_vectors(topic, v);
    Eigen::MatrixXd sim(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) sim(i, j) = v.col(i).dot(v.col(j)) / (v.col(i).norm() * v.col(j).norm());
    const Eigen::VectorXd p = oracle::stationary(oracle::lexrank_matrix(sim, 0.85));
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    std::vector<double> sorted(p.data(), p.data() + 3);
    std::sort(sorted.begin(), sorted.end());
    if (sorted[2] - sorted[1] < 1e-6) continue;
    const auto r = build_lexrank(topic, store, GraphScope::individual, 1);
    ASSERT_EQ(r.picks.size(), 1u);
    EXPECT_EQ(r.picks[0].sent_idx, best);
  }
}

TEST(LexRankStrategy, GlobalRespectsM) {
  Gen g(3);
  const auto topic = sized_topic({10, 12, 9});
  const auto store = store_with_vectors(topic, g.gaussian(6, 31));
  for (int m : {1, 5, 30, 90}) {
    const auto r = build_lexrank(topic, store, GraphScope::global, 10, m);
    EXPECT_EQ(static_cast<int>(r.picks.size()), std::min(m, 31));
    validate_pseudo_reference(r, topic);
  }
}

TEST(AffinityStrategy, SingleSentenceDocument) {
  const auto topic = sized_topic({1});
  const auto store = store_with_vectors(topic, Eigen::MatrixXd::Ones(3, 1));
  EXPECT_EQ(build_affinity(topic, store, GraphScope::individual).picks, (std::vector<SentenceRef>{{"d0", 0}}));
  EXPECT_EQ(build_affinity(topic, store, GraphScope::global).picks, (std::vector<SentenceRef>{{"d0", 0}}));
}

TEST(AffinityStrategy, ThreeClusterDocument) {
  Gen g(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto topic = sized_topic({15});
    Eigen::MatrixXd v(6, 15);
    for (int i = 0; i < 15; ++i) {
      v.col(i) = 0.05 * g.gaussian(6, 1);
      v(i % 3, i) += 1.0;  // cluster of sentence i is i % 3
    }
    const auto store = store_with_vectors(topic, v);
    const auto r = build_affinity(topic, store, GraphScope::individual);
    ASSERT_EQ(r.picks.size(), 3u);
    std::set<int> clusters;
    for (const auto& p : r.picks) clusters.insert(p.sent_idx % 3);
    EXPECT_EQ(clusters.size(), 3u);
  }
}

TEST(AffinityStrategy, DuplicatedDocumentsGlobal) {
  // Two copies of one document. Copies have similarity 1, above the median
  // preference, so an optimal exemplar set never keeps both copies of a
  // sentence and global scope cannot need more exemplars than one document has.
  Gen g(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = g.integer(2, 5);
    const Eigen::MatrixXd doc = g.gaussian(4, n);
    Eigen::MatrixXd both(4, 2 * n);
    both << doc, doc;
    const auto topic = sized_topic({n, n});
    const auto store = store_with_vectors(topic, both);

    const auto individual = build_affinity(topic, store, GraphScope::individual);
    std::vector<int> first, second;
    for (const auto& p : individual.picks) (p.doc_id == "d0" ? first : second).push_back(p.sent_idx);
    EXPECT_EQ(first, second);

    const auto global = build_affinity(topic, store, GraphScope::global);
    validate_pseudo_reference(global, topic);
    std::set<int> positions;
    for (const auto& p : global.picks) positions.insert(p.sent_idx);
    EXPECT_EQ(positions.size(), global.picks.size()) << "both copies of a sentence picked";
    EXPECT_LE(static_cast<int>(global.picks.size()), n);

    Eigen::MatrixXd sim(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i)
      for (int j = 0; j < 2 * n; ++j)
        sim(i, j) = both.col(i).dot(both.col(j)) / (both.col(i).norm() * both.col(j).norm());
    std::vector<double> vals;
    for (int i = 0; i < 2 * n; ++i)
      for (int j = 0; j < 2 * n; ++j)
        if (i != j) vals.push_back(sim(i, j));
    std::sort(vals.begin(), vals.end());
    const double median = (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]) / 2;
    std::set<int> best_positions;
    const auto best = oracle::best_exemplars(sim, median);
    for (int e : best) best_positions.insert(e % n);
    EXPECT_EQ(best_positions.size(), best.size());
    EXPECT_LE(static_cast<int>(best.size()), n);
  }
}

TEST(PacSumStrategy, TwoSentenceDocumentPrefersFirst) {
  Gen g(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto topic = sized_topic({2});
    Eigen::MatrixXd v = g.gaussian(4, 2);
    if (v.col(0).dot(v.col(1)) <= 0) v.col(1) = -v.col(1);
    const auto store = store_with_vectors(topic, v);
    EXPECT_EQ(build_pacsum(topic, store, GraphScope::individual, 1).picks, (std::vector<SentenceRef>{{"d0", 0}}));
  }
}

TEST(PacSumStrategy, KOnePicksOnePerDocument) {
  Gen g(7);
  const auto topic = sized_topic({5, 3, 8});
  const auto store = store_with_vectors(topic, g.gaussian(5, 16));
  const auto r = build_pacsum(topic, store, GraphScope::individual, 1);
  ASSERT_EQ(r.picks.size(), 3u);
  EXPECT_EQ(r.picks[0].doc_id, "d0");
  EXPECT_EQ(r.picks[1].doc_id, "d1");
  EXPECT_EQ(r.picks[2].doc_id, "d2");
}

TEST(PacSumStrategy, RankingMatchesDirectRecomputation) {
  Gen g(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto topic = sized_topic({4});
    const Eigen::MatrixXd v = g.gaussian(5, 4);
    const auto store = store_with_vectors(topic, v);
    Eigen::MatrixXd sim(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) sim(i, j) = v.col(i).dot(v.col(j)) / (v.col(i).norm() * v.col(j).norm());
    const auto scores = oracle::pacsum(sim);
    std::vector<int> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });
    for (int k = 1; k <= 4; ++k) {
      std::set<int> expected(order.begin(), order.begin() + k);
      std::set<int> got;
      for (const auto& p : build_pacsum(topic, store, GraphScope::individual, k).picks) got.insert(p.sent_idx);
      EXPECT_EQ(got, expected);
    }
  }
}

TEST(PacSumStrategy, GlobalRanksWithinDocumentScoresJointly) {
  Gen g(9);
  const auto topic = sized_topic({4, 5});
  const Eigen::MatrixXd v = g.gaussian(5, 9);
  const auto store = store_with_vectors(topic, v);
  std::vector<std::pair<double, SentenceRef>> all;
  for (int d = 0, col = 0; d < 2; ++d) {
    const int n = d == 0 ? 4 : 5;
    Eigen::MatrixXd sim(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        sim(i, j) = v.col(col + i).dot(v.col(col + j)) / (v.col(col + i).norm() * v.col(col + j).norm());
    const auto s = oracle::pacsum(sim);
    for (int i = 0; i < n; ++i) all.push_back({s[static_cast<std::size_t>(i)], {"d" + std::to_string(d), i}});
    col += n;
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const auto r = build_pacsum(topic, store, GraphScope::global, 10, 3);
  std::set<SentenceRef> expected{all[0].second, all[1].second, all[2].second};
  EXPECT_EQ(as_set(r), expected);
}

TEST(TopClique, AllNonTopNearTopSentences) {
  // Every non-top sentence is a copy of its document's lead.
  const auto topic = sized_topic({3, 3});
  Eigen::MatrixXd v(4, 6);
  v.col(0) = v.col(1) = v.col(2) = Eigen::Vector4d(1, 0, 0, 0);
  v.col(3) = v.col(4) = v.col(5) = Eigen::Vector4d(0, 1, 0, 0);
  const auto store = store_with_vectors(topic, v);
  EXPECT_EQ(build_top_clique(topic, store, 1, 0.75).picks, build_top_n(topic, 1).picks);
}

TEST(TopClique, NoSimilarPairsGivesTopOnly) {
  const auto topic = sized_topic({3, 3});
  const auto store = store_with_vectors(topic, Eigen::MatrixXd::Identity(6, 6));
  EXPECT_EQ(build_top_clique(topic, store, 1, 0.75).picks, build_top_n(topic, 1).picks);
}

TEST(TopClique, PlantedTriangleAddsItsCenter) {
  // d0: lead T0, then A, B; d1: lead T1, then C, D. A, B, C are mutually
  // similar and unlike both leads; D is isolated.
  const auto topic = sized_topic({3, 3});
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(6, 6);
  v(0, 0) = 1;                          // T0
  v(1, 1) = 1;                          // A
  v(1, 2) = 1, v(2, 2) = 0.4;           // B
  v(0, 3) = 0.1, v(5, 3) = 1;           // T1
  v(1, 4) = 1, v(3, 4) = 0.4;           // C
  v(4, 5) = 1;                          // D
  const auto store = store_with_vectors(topic, v);

  // Direct average-similarity computation over the triangle {A, B, C}.
  const std::vector<int> tri{1, 2, 4};
  auto cos = [&](int i, int j) { return v.col(i).dot(v.col(j)) / (v.col(i).norm() * v.col(j).norm()); };
  int center = -1;
  double best = -2;
  for (int i : tri) {
    double s = 0;
    for (int j : tri)
      if (j != i) s += cos(i, j);
    ASSERT_GE(cos(i, tri[0] == i ? tri[1] : tri[0]), 0.75);
    if (s / 2 > best) {
      best = s / 2;
      center = i;
    }
  }
  ASSERT_EQ(center, 1);  // A
  const auto r = build_top_clique(topic, store, 1, 0.75);
  EXPECT_EQ(r.picks, (std::vector<SentenceRef>{{"d0", 0}, {"d0", 1}, {"d1", 0}}));
}

TEST(TopClique, CenterTooCloseToTopIsDropped) {
  const auto topic = sized_topic({3, 1});
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 4);
  v(0, 0) = 1;                  // lead of d0
  v(0, 1) = 1, v(1, 1) = 0.1;   // close to the lead
  v(0, 2) = 1, v(1, 2) = 0.2;   // close to the lead and to sentence 1
  v(3, 3) = 1;                  // lead of d1
  const auto store = store_with_vectors(topic, v);
  EXPECT_EQ(build_top_clique(topic, store, 1, 0.75).picks, build_top_n(topic, 1).picks);
}

TEST(Properties, EveryStrategyValidOnRandomTopics) {
  Gen g(10);
  for (int i = 0; i < 1000; ++i) {
    const auto topic = random_topic(g, i);
    const auto store = encode_fallback({topic}, FallbackConfig{16, static_cast<std::uint64_t>(i), false});
    std::size_t total = 0;
    for (const auto& d : topic.documents) total += d.sentences.size();
    for (const auto& spec : all_strategies(g)) {
      const auto r = build_pseudo_reference(topic, &store, spec);
      ASSERT_NO_THROW(validate_pseudo_reference(r, topic)) << spec.name() << " on topic " << i;
      EXPECT_FALSE(r.picks.empty());
      EXPECT_LE(r.picks.size(), total);
      if (spec.kind == StrategyKind::slr && spec.scope == GraphScope::global) {
        EXPECT_LE(static_cast<int>(r.picks.size()), spec.m);
      }
      EXPECT_EQ(r.topic_id, topic.topic_id);
    }
  }
}

TEST(Properties, DeterministicAcrossCalls) {
  Gen g(11);
  for (int i = 0; i < 50; ++i) {
    const auto topic = random_topic(g, i);
    const auto store = encode_fallback({topic}, FallbackConfig{16, 0, false});
    for (const auto& spec : all_strategies(g))
      EXPECT_EQ(build_pseudo_reference(topic, &store, spec).picks, build_pseudo_reference(topic, &store, spec).picks);
  }
}

TEST(Validation, RejectsBadReferences) {
  const auto topic = sized_topic({3});
  PseudoReference r{"t", {{"d0", 0}, {"d0", 0}}, {}};
  EXPECT_THROW(validate_pseudo_reference(r, topic), ValidationError);
  r.picks = {{"d0", 5}};
  EXPECT_THROW(validate_pseudo_reference(r, topic), ValidationError);
  r.picks = {{"d0", 2}, {"d0", 1}};
  EXPECT_THROW(validate_pseudo_reference(r, topic), ValidationError);
  r.picks = {{"nope", 0}};
  EXPECT_THROW(validate_pseudo_reference(r, topic), ValidationError);
  r.picks = {{"d0", 0}};
  r.topic_id = "other";
  EXPECT_THROW(validate_pseudo_reference(r, topic), ValidationError);
}

TEST(Validation, EmbeddingStrategiesNeedAStore) {
  const auto topic = sized_topic({3});
  EXPECT_THROW(build_pseudo_reference(topic, nullptr, parse_strategy("slr_i")), ValidationError);
  EXPECT_NO_THROW(build_pseudo_reference(topic, nullptr, parse_strategy("top10")));
}

TEST(Spec, ParseAndName) {
  EXPECT_EQ(parse_strategy("top10").name(), "top_n:n=10");
  EXPECT_EQ(parse_strategy("random5").name(), "random_n:n=5");
  EXPECT_EQ(parse_strategy("slr_i").name(), "slr:individual:k=10");
  EXPECT_EQ(parse_strategy("slr_g").name(), "slr:global:m=90");
  EXPECT_EQ(parse_strategy("sc_g").name(), "sc:global");
  EXPECT_EQ(parse_strategy("sps_i").name(), "sps:individual:k=10");
  EXPECT_EQ(parse_strategy("tc").name(), "tc:n=10:threshold=0.75");
  EXPECT_EQ(parse_strategy("random_n:n=3:seed=9").seed, 9u);
  EXPECT_EQ(parse_strategy("tc:n=5:threshold=0.5:components").clique_mode, CliqueMode::components);
  for (const auto* name : {"top_n:n=10", "random_n:n=10:seed=4", "slr:global:m=90", "sps:individual:k=3", "sc:individual",
                           "tc:n=10:threshold=0.75"})
    EXPECT_EQ(parse_strategy(name).name(), name);
}

TEST(Spec, RejectsInvalid) {
  EXPECT_THROW(parse_strategy("top0"), ValidationError);
  EXPECT_THROW(parse_strategy("bogus"), ValidationError);
  EXPECT_THROW(parse_strategy("tc:threshold=1.5"), ValidationError);
  EXPECT_THROW(parse_strategy("top_n:n=abc"), ValidationError);
  EXPECT_THROW(parse_strategy("slr:individual:k=0"), ValidationError);
}

TEST(Jsonl, RoundTrip) {
  Gen g(12);
  const auto topic = sized_topic({5, 6});
  const auto store = store_with_vectors(topic, g.gaussian(4, 11));
  std::vector<PseudoReference> refs{build_top_n(topic, 2), build_random(topic, 3, 1),
                                    build_lexrank(topic, store, GraphScope::global, 10, 4)};
  std::stringstream ss;
  write_pseudo_references(ss, refs);
  const auto back = read_pseudo_references(ss, "refs.jsonl");
  ASSERT_EQ(back.size(), refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    EXPECT_EQ(back[i].topic_id, refs[i].topic_id);
    EXPECT_EQ(back[i].picks, refs[i].picks);
    EXPECT_EQ(back[i].strategy.name(), refs[i].strategy.name());
  }
}
