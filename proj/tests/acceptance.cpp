// Acceptance checks: one [PASS]/[FAIL] line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pseval/correlation.hpp"
#include "pseval/rlsum.hpp"
#include "pseval/run.hpp"
#include "pseval/simgraph.hpp"
#include "pseval/synth.hpp"
#include "pseval/wmd.hpp"

using namespace pseval;
using testing_support::Gen;
using testing_support::read_file;
using testing_support::source_dir;
using testing_support::TempDir;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

TokenBag random_bag(Gen& g, int n, int dim, bool uniform) {
  TokenBag b;
  for (int i = 0; i < n; ++i) b.stems.push_back("s" + std::to_string(i));
  b.vectors = g.gaussian(dim, n);
  b.weights.resize(n);
  for (int i = 0; i < n; ++i) b.weights(i) = uniform ? 1.0 : g.uniform(0.05, 1.0);
  b.weights /= b.weights.sum();
  return b;
}

Outcome ot_exact() {
  const auto t0 = Clock::now();
  Gen g(101);
  int bad = 0;
  double worst = 0;
  for (int draw = 0; draw < 500; ++draw) {
    const int n = g.integer(1, 6);
    const auto a = random_bag(g, n, g.integer(2, 16), true);
    auto b = random_bag(g, n, static_cast<int>(a.vectors.rows()), true);
    const double err = std::abs(exact_wmd(a, b).cost - oracle::assignment(wmd_cost_matrix(a, b)));
    worst = std::max(worst, err);
    bad += !(err <= 1e-9);
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 30.0, fmt("%.0f/500 mismatches, max error %.2e, %.2f s", bad, worst, secs)};
}

Outcome ot_bound() {
  Gen g(102);
  int violations = 0;
  double worst_gap = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    const int dim = g.integer(2, 16);
    const auto a = random_bag(g, g.integer(1, 20), dim, g.coin());
    const auto b = random_bag(g, g.integer(1, 20), dim, g.coin());
    const double relaxed = relaxed_wmd(a, b), exact = exact_wmd(a, b).cost;
    // Both sides carry rounding error; the bound is stated up to 1e-9.
    violations += !(relaxed <= exact + 1e-9);
    worst_gap = std::max(worst_gap, relaxed - exact);
  }
  return {violations == 0, fmt("%.0f/1000 violations, max relaxed - exact %.2e", violations, worst_gap)};
}

Outcome lexrank_oracle() {
  Gen g(103);
  int bad = 0;
  double worst = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const int n = g.integer(5, 50);
    const Eigen::MatrixXd s = similarity_matrix(g.gaussian(g.integer(2, 12), n)).values();
    const Eigen::VectorXd expected = oracle::stationary(oracle::lexrank_matrix(s, 0.85));
    const double err = (lexrank(s).scores - expected).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, err);
    bad += !(err <= 1e-6);
  }
  return {bad == 0, fmt("%.0f/100 graphs off, max L-inf error %.2e", bad, worst)};
}

Outcome affinity_clusters() {
  Gen g(104);
  const int dim = 8, per = 5;
  int recovered = 0, fixed_point = 0;
  double worst_ratio = 1e300;
  for (int inst = 0; inst < 50; ++inst) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g.gaussian(dim, 3));
    const Eigen::MatrixXd centers = qr.householderQ() * Eigen::MatrixXd::Identity(dim, 3);
    Eigen::MatrixXd pts(dim, 3 * per);
    std::vector<int> label;
    double spread = 0;
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < per; ++k) {
        pts.col(c * per + k) = centers.col(c) + 0.08 * g.gaussian(dim, 1);
        spread = std::max(spread, (pts.col(c * per + k) - centers.col(c)).norm());
        label.push_back(c);
      }
    // Orthonormal centers are sqrt(2) apart.
    worst_ratio = std::min(worst_ratio, std::sqrt(2.0) / spread);
    const Eigen::MatrixXd s = similarity_matrix(pts).values();
    const auto c = affinity_propagation(s);

    bool ok = static_cast<int>(c.exemplar_of.size()) == 3 * per && !c.exemplars.empty();
    for (int e : c.exemplars) ok = ok && c.exemplar_of[static_cast<std::size_t>(e)] == e;
    for (int i = 0; ok && i < 3 * per; ++i) {
      const int e = c.exemplar_of[static_cast<std::size_t>(i)];
      ok = std::binary_search(c.exemplars.begin(), c.exemplars.end(), e);
      for (int f : c.exemplars) ok = ok && (e == i || s(i, e) >= s(i, f));
    }
    fixed_point += ok;

    std::set<int> hit;
    for (int e : c.exemplars) hit.insert(label[static_cast<std::size_t>(e)]);
    recovered += c.exemplars.size() == 3 && hit.size() == 3;
  }
  return {recovered >= 48 && fixed_point == 50 && worst_ratio >= 3.0,
          fmt("%.0f/50 recovered, fixed point %.0f/50, min separation/spread %.2f", recovered, fixed_point, worst_ratio)};
}

Outcome correlation_oracles() {
  Gen g(105);
  int checked = 0, bad = 0;
  double worst = 0;
  while (checked < 200) {
    const int n = g.integer(5, 60);
    const bool tied = checked % 2 == 0;
    const auto x = tied ? g.tied(n, g.integer(2, 6)) : g.reals(n, -1, 1);
    const auto y = g.tied(n, g.integer(2, 8));
    const auto flat = [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [&](double e) { return e == v[0]; }); };
    if (flat(x) || flat(y)) continue;
    ++checked;
    for (double err : {std::abs(pearson(x, y) - oracle::pearson(x, y)), std::abs(spearman(x, y) - oracle::spearman(x, y)),
                       std::abs(kendall(x, y) - oracle::kendall(x, y))}) {
      worst = std::max(worst, err);
      bad += !(err <= 1e-12);
    }
  }
  return {bad == 0, fmt("%.0f mismatches over 200 vector pairs, max error %.2e", bad, worst)};
}

RunConfig synthetic_config(const fs::path& out) {
  std::ifstream in(source_dir() / "configs/synthetic.json");
  RunConfig c = config_from_json(json::parse(in));
  c.corpus = source_dir() / c.corpus;
  if (c.references) c.references = source_dir() / *c.references;
  c.jobs = jobs();
  c.out = out;
  return c;
}

std::map<std::string, double> taus(const fs::path& out) {
  std::map<std::string, double> t;
  const auto report = json::parse(read_file(out / "report.json"));
  for (const auto& r : report.at("reports"))
    t[r.at("metric_name").get<std::string>()] = r.at("averages").at("kendall").get<double>();
  return t;
}

Outcome end_to_end() {
  TempDir tmp("accept_e2e");
  auto c = synthetic_config(tmp.path());
  c.strategies = {parse_strategy("top_n:n=10")};
  c.scorers = {ScorerKind::supert, ScorerKind::js};
  const auto t0 = Clock::now();
  if (cmd_evaluate(c) != 0) return {false, "evaluate failed"};
  const double secs = seconds_since(t0);
  auto t = taus(tmp.path());
  const double supert = t.at("supert[top_n:n=10]"), js = t.at("js");
  return {supert >= 0.9 && supert > js && secs < 120.0, fmt("SUPERT-Top10 tau %.3f, JS tau %.3f, %.1f s", supert, js, secs)};
}

Outcome top_beats_random() {
  TempDir tmp("accept_topn");
  auto c = synthetic_config(tmp.path());
  const std::vector<int> sizes{3, 5, 10, 15};
  c.strategies.clear();
  for (int n : sizes) {
    c.strategies.push_back(parse_strategy("top_n:n=" + std::to_string(n)));
    c.strategies.push_back(parse_strategy("random_n:n=" + std::to_string(n)));
  }
  c.scorers = {ScorerKind::supert};
  c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  if (cmd_evaluate(c) != 0) return {false, "evaluate failed"};
  const auto t = taus(tmp.path());
  bool ok = true;
  std::string detail;
  for (int n : sizes) {
    const double top = t.at("supert[top_n:n=" + std::to_string(n) + "]");
    const double rnd = t.at("supert[random_n:n=" + std::to_string(n) + "]");
    ok = ok && top > rnd;
    if (!detail.empty()) detail += "; ";
    detail += fmt("N=%.0f top %.3f vs random %.3f", n, top, rnd);
  }
  return {ok, detail};
}

Outcome rl_improvement() {
  const auto t0 = Clock::now();
  TempDir tmp("accept_rl");
  const auto c = synthetic_config(tmp.path());
  std::ifstream in(c.corpus);
  const auto corpus = read_corpus_jsonl(in, c.corpus.string());
  const auto store = encode_fallback(corpus, c.embeddings.fallback);
  std::map<std::string, std::vector<std::vector<std::string>>> refs;
  for (const auto& r : load_references(*c.references)) refs[r.topic_id].push_back(rouge_tokens(r.text, c.rl.rouge));

  const int seeds = 10, random_draws = 100;
  RewardSpec spec;
  spec.kind = RewardKind::supert;
  spec.strategy = c.rl.strategy;
  spec.supert = c.supert;
  std::vector<std::vector<double>> greedy_reward(corpus.size()), greedy_r2(corpus.size());
  std::vector<double> random_reward(corpus.size()), random_r2(corpus.size());
  parallel_for(corpus.size(), jobs(), [&](std::size_t i) {
    const Topic& t = corpus[i];
    const RewardFunction reward(t, &store, spec);
    const FeatureMap fm(t, store, c.rl.budget);
    const auto r2 = [&](const ExtractState& s) {
      const auto toks = rouge_tokens(sentence_ptrs(selection_units(t, in_document_order(s.selected, t))), c.rl.rouge);
      return rouge(toks, refs.at(t.topic_id), RougeVariant::r2).recall;
    };
    for (int k = 0; k < random_draws; ++k) {
      const auto s = random_rollout(t, 5000 + static_cast<std::uint64_t>(k), c.rl.budget);
      random_reward[i] += reward(s.selected) / random_draws;
      random_r2[i] += r2(s) / random_draws;
    }
    for (int seed = 0; seed < seeds; ++seed) {
      TrainOptions o;
      o.episodes = c.rl.episodes;
      o.budget = c.rl.budget;
      o.seed = static_cast<std::uint64_t>(seed);
      const auto s = rollout(fm, train(fm, reward, o));
      greedy_reward[i].push_back(reward(s.selected));
      greedy_r2[i].push_back(r2(s));
    }
  });
  const double topics = static_cast<double>(corpus.size());
  double rnd_reward = 0, rnd_r2 = 0, gr_r2 = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    rnd_reward += random_reward[i] / topics;
    rnd_r2 += random_r2[i] / topics;
  }
  int wins = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    double mean = 0, mean_r2 = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      mean += greedy_reward[i][static_cast<std::size_t>(seed)] / topics;
      mean_r2 += greedy_r2[i][static_cast<std::size_t>(seed)] / topics;
    }
    wins += mean > rnd_reward;
    gr_r2 += mean_r2 / seeds;
  }
  const double secs = seconds_since(t0);
  return {wins >= 9 && gr_r2 > rnd_r2 && secs < 300.0,
          fmt("%.0f/10 seeds beat random reward, R2 %.4f vs random %.4f, %.1f s", wins, gr_r2, rnd_r2, secs)};
}

Outcome rouge_hand() {
  const std::vector<std::string> cand{"a", "b", "c"}, ref{"a", "b", "d"};
  const auto r1 = rouge(cand, {ref}, RougeVariant::r1);
  const auto r2 = rouge(cand, {ref}, RougeVariant::r2);
  const auto rl = rouge(cand, {ref}, RougeVariant::rl);
  const bool ok = r1.recall == 2.0 / 3.0 && r2.recall == 0.5 && rl.recall == 2.0 / 3.0 && r1.precision == 2.0 / 3.0 &&
                  r1.f1 == 2.0 / 3.0;
  return {ok, fmt("R1 %.6f, R2 %.6f, RL %.6f", r1.recall, r2.recall, rl.recall)};
}

Outcome determinism() {
  TempDir tmp("accept_det");
  auto a = synthetic_config(tmp.path() / "a");
  auto b = synthetic_config(tmp.path() / "b");
  if (cmd_evaluate(a) != 0 || cmd_evaluate(b) != 0) return {false, "evaluate failed"};
  int differing = 0, files = 0;
  for (const auto& e : fs::directory_iterator(a.out)) {
    ++files;
    differing += read_file(e.path()) != read_file(b.out / e.path().filename());
  }
  return {differing == 0 && files == 5, fmt("%.0f of %.0f output files differ", differing, files)};
}

}  // namespace

int main() {
  set_log_level(0);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"OT exact matches assignment oracle (500 draws, <= 6x6, 1e-9, < 30 s)", ot_exact},
      {"OT relaxed <= exact + 1e-9 (1000 instances, <= 20x20)", ot_bound},
      {"LexRank matches eigen oracle (100 graphs, 5-50 nodes, 1e-6)", lexrank_oracle},
      {"Affinity propagation recovers 3 clusters (>= 48/50), fixed point 50/50", affinity_clusters},
      {"Correlations match brute-force oracles (200 pairs with ties, 1e-12)", correlation_oracles},
      {"SUPERT-TopN tau >= 0.9 and > JS on synthetic corpus (< 2 min)", end_to_end},
      {"TopN tau > RandomN tau (10 seeds)", top_beats_random},
      {"RL beats random in >= 9/10 seeds and on ROUGE-2 (< 5 min)", rl_improvement},
      {"ROUGE hand examples exact", rouge_hand},
      {"Two evaluate runs byte-identical", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
