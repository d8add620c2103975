#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pseval/correlation.hpp"
#include "pseval/evalharness.hpp"
#include "pseval/random.hpp"

using json = nlohmann::json;

namespace pseval {

Coefficients correlate(const std::vector<double>& scores, const std::vector<double>& ratings) {
  return {pearson(scores, ratings), spearman(scores, ratings), kendall(scores, ratings)};
}

Coefficients permutation_p_values(const std::vector<double>& scores, const std::vector<double>& ratings,
                                  int permutations, std::uint64_t seed) {
  const Coefficients observed = correlate(scores, ratings);
  Rng rng(seed);
  std::vector<double> shuffled = ratings;
  int hits_r = 0, hits_rho = 0, hits_tau = 0;
  // Shuffled ratings keep their variance, so correlate() cannot degenerate here.
  for (int p = 0; p < permutations; ++p) {
    rng.shuffle(shuffled);
    const Coefficients c = correlate(scores, shuffled);
    hits_r += std::abs(c.pearson) >= std::abs(observed.pearson) - 1e-12;
    hits_rho += std::abs(c.spearman) >= std::abs(observed.spearman) - 1e-12;
    hits_tau += std::abs(c.kendall) >= std::abs(observed.kendall) - 1e-12;
  }
  const double denom = 1.0 + permutations;
  return {(1.0 + hits_r) / denom, (1.0 + hits_rho) / denom, (1.0 + hits_tau) / denom};
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

struct TopicOutcome {
  std::vector<std::optional<Coefficients>> per_seed;
  std::vector<std::optional<Coefficients>> p_per_seed;
  std::string skip_reason;
  int n = 0;
  std::vector<ScoreRow> rows;
};

Coefficients& operator+=(Coefficients& a, const Coefficients& b) {
  a.pearson += b.pearson;
  a.spearman += b.spearman;
  a.kendall += b.kendall;
  return a;
}

Coefficients scaled(Coefficients a, double f) {
  a.pearson *= f;
  a.spearman *= f;
  a.kendall *= f;
  return a;
}

}  // namespace

Evaluation evaluate_metric(const std::vector<Topic>& corpus, const std::string& metric_name, const TopicScorer& scorer,
                           const HarnessOptions& options) {
  if (options.seeds.empty()) throw ValidationError("harness needs at least one seed");
  const std::size_t n_seeds = options.seeds.size();
  std::vector<TopicOutcome> outcomes(corpus.size());

  parallel_for(corpus.size(), options.jobs, [&](std::size_t ti) {
    const Topic& topic = corpus[ti];
    TopicOutcome& out = outcomes[ti];
    out.per_seed.assign(n_seeds, std::nullopt);
    out.p_per_seed.assign(n_seeds, std::nullopt);
    std::vector<const CandidateSummary*> rated;
    std::vector<double> ratings;
    for (const auto& s : topic.summaries) {
      if (s.human_rating) {
        rated.push_back(&s);
        ratings.push_back(*s.human_rating);
      }
    }
    out.n = static_cast<int>(rated.size());
    if (out.n < options.min_summaries) {
      out.skip_reason = "only " + std::to_string(out.n) + " rated summaries (need " +
                        std::to_string(options.min_summaries) + ")";
      return;
    }
    for (std::size_t si = 0; si < n_seeds; ++si) {
      const auto scores = scorer(topic, rated, options.seeds[si]);
      if (scores.size() != rated.size()) throw Error("scorer returned the wrong number of scores");
      const std::string name =
          n_seeds > 1 ? metric_name + "@seed=" + std::to_string(options.seeds[si]) : metric_name;
      for (std::size_t k = 0; k < rated.size(); ++k) out.rows.push_back({topic.topic_id, rated[k]->summary_id, name, scores[k]});
      try {
        out.per_seed[si] = correlate(scores, ratings);
      } catch (const DegenerateInputError& e) {
        if (out.skip_reason.empty()) out.skip_reason = std::string("degenerate: ") + e.what();
        continue;
      }
      if (options.significance)
        out.p_per_seed[si] = permutation_p_values(scores, ratings, options.permutations,
                                                  options.permutation_seed ^ fnv1a64(topic.topic_id) ^
                                                      (options.seeds[si] * 0x9E3779B97F4A7C15ULL));
    }
  });

  // Deterministic reduction in topic_id order.
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return corpus[a].topic_id < corpus[b].topic_id; });

  Evaluation ev;
  MetricReport& rep = ev.report;
  rep.metric_name = metric_name;
  rep.seeds = static_cast<int>(n_seeds);
  rep.alpha = options.alpha;

  std::vector<Coefficients> seed_sum(n_seeds);
  std::vector<int> seed_count(n_seeds, 0);
  for (auto ti : order) {
    const TopicOutcome& out = outcomes[ti];
    ev.scores.insert(ev.scores.end(), out.rows.begin(), out.rows.end());
    Coefficients sum, psum;
    int used = 0;
    for (std::size_t si = 0; si < n_seeds; ++si) {
      if (!out.per_seed[si]) continue;
      sum += *out.per_seed[si];
      seed_sum[si] += *out.per_seed[si];
      ++seed_count[si];
      if (out.p_per_seed[si]) psum += *out.p_per_seed[si];
      ++used;
    }
    if (used == 0) {
      rep.skipped.push_back({corpus[ti].topic_id, out.skip_reason});
      continue;
    }
    TopicCorrelation tc{corpus[ti].topic_id, scaled(sum, 1.0 / used), out.n, used, std::nullopt};
    if (options.significance) tc.p_value = scaled(psum, 1.0 / used);
    rep.per_topic.push_back(std::move(tc));
  }
  if (rep.per_topic.empty()) throw EmptyReportError("no topic of the corpus yields a usable correlation for " + metric_name);

  Coefficients avg;
  int seeds_with_topics = 0;
  for (std::size_t si = 0; si < n_seeds; ++si) {
    if (seed_count[si] == 0) continue;
    avg += scaled(seed_sum[si], 1.0 / seed_count[si]);
    ++seeds_with_topics;
  }
  rep.averages = scaled(avg, 1.0 / seeds_with_topics);

  if (options.significance) {
    Coefficients share;
    for (const auto& tc : rep.per_topic) {
      share.pearson += tc.p_value->pearson < options.alpha;
      share.spearman += tc.p_value->spearman < options.alpha;
      share.kendall += tc.p_value->kendall < options.alpha;
    }
    rep.significant_share = scaled(share, 1.0 / static_cast<double>(rep.per_topic.size()));
  }
  return ev;
}

// ---- metric specs -------------------------------------------------------------

bool MetricSpec::needs_embeddings() const {
  switch (scorer) {
    case ScorerKind::supert:
    case ScorerKind::cosine_reference:
    case ScorerKind::cosine_source: return true;
    case ScorerKind::tfidf:
    case ScorerKind::js: return false;
  }
  return false;
}

bool MetricSpec::is_seeded() const {
  return needs_strategy() && strategy.kind == StrategyKind::random_n && !strategy.seed;
}

std::string MetricSpec::name() const {
  std::string s = to_string(scorer);
  if (needs_strategy()) s += "[" + strategy.name() + "]";
  return s;
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "supert") return ScorerKind::supert;
  if (name == "cosine" || name == "cosine_reference") return ScorerKind::cosine_reference;
  if (name == "cosine_source") return ScorerKind::cosine_source;
  if (name == "tfidf") return ScorerKind::tfidf;
  if (name == "js") return ScorerKind::js;
  throw ValidationError("unknown scorer '" + std::string(name) +
                        "' (expected supert, cosine_reference, cosine_source, tfidf or js)");
}

std::string to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::supert: return "supert";
    case ScorerKind::cosine_reference: return "cosine_reference";
    case ScorerKind::cosine_source: return "cosine_source";
    case ScorerKind::tfidf: return "tfidf";
    case ScorerKind::js: return "js";
  }
  return "?";
}

TopicScorer make_scorer(const MetricSpec& spec, const EmbeddingStore* store) {
  if (spec.needs_embeddings() && store == nullptr)
    throw ValidationError("metric " + spec.name() + " needs embeddings");
  if (spec.needs_strategy()) spec.strategy.validate();
  switch (spec.scorer) {
    case ScorerKind::supert:
      return [spec, store](const Topic& topic, const std::vector<const CandidateSummary*>& sums, std::uint64_t seed) {
        const auto ref = build_pseudo_reference(topic, store, spec.strategy, seed);
        const SupertScorer scorer(topic, *store, ref, spec.supert);
        std::vector<double> out;
        for (const auto* s : sums) out.push_back(scorer.score(*s));
        return out;
      };
    case ScorerKind::cosine_reference:
      return [spec, store](const Topic& topic, const std::vector<const CandidateSummary*>& sums, std::uint64_t seed) {
        const auto ref = build_pseudo_reference(topic, store, spec.strategy, seed);
        const auto ref_units = reference_units(topic, ref);
        std::vector<double> out;
        for (const auto* s : sums) out.push_back(score_cosine_pooled(topic.topic_id, summary_units(*s), ref_units, *store));
        return out;
      };
    case ScorerKind::cosine_source:
      return [store](const Topic& topic, const std::vector<const CandidateSummary*>& sums, std::uint64_t) {
        const auto src = source_units(topic);
        std::vector<double> out;
        for (const auto* s : sums) out.push_back(score_cosine_pooled(topic.topic_id, summary_units(*s), src, *store));
        return out;
      };
    case ScorerKind::tfidf:
      return [](const Topic& topic, const std::vector<const CandidateSummary*>& sums, std::uint64_t) {
        const auto stats = source_stats(topic);
        std::vector<double> out;
        for (const auto* s : sums) out.push_back(score_tfidf(sentence_ptrs(*s), stats));
        return out;
      };
    case ScorerKind::js:
      return [](const Topic& topic, const std::vector<const CandidateSummary*>& sums, std::uint64_t) {
        const auto stats = source_stats(topic);
        std::vector<double> out;
        for (const auto* s : sums) out.push_back(score_js(sentence_ptrs(*s), stats));
        return out;
      };
  }
  throw ValidationError("unknown scorer");
}

// ---- output -------------------------------------------------------------------

namespace {

json coeff_json(const Coefficients& c) {
  return json{{"pearson", c.pearson}, {"spearman", c.spearman}, {"kendall", c.kendall}};
}

Coefficients coeff_from(const json& j) {
  return {j.at("pearson").get<double>(), j.at("spearman").get<double>(), j.at("kendall").get<double>()};
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

json report_to_json(const MetricReport& r) {
  json per_topic = json::array();
  for (const auto& t : r.per_topic) {
    json row{{"topic_id", t.topic_id},
             {"n_summaries", t.n_summaries},
             {"seeds_used", t.seeds_used},
             {"pearson", t.value.pearson},
             {"spearman", t.value.spearman},
             {"kendall", t.value.kendall}};
    if (t.p_value) row["p_value"] = coeff_json(*t.p_value);
    per_topic.push_back(std::move(row));
  }
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"topic_id", s.topic_id}, {"reason", s.reason}});
  json j{{"metric_name", r.metric_name}, {"seeds", r.seeds},    {"averages", coeff_json(r.averages)},
         {"per_topic", per_topic},       {"skipped", skipped}, {"significance", nullptr}};
  if (r.significant_share)
    j["significance"] = {{"alpha", r.alpha}, {"significant_share", coeff_json(*r.significant_share)}};
  return j;
}

MetricReport report_from_json(const json& j) {
  MetricReport r;
  r.metric_name = j.at("metric_name").get<std::string>();
  r.seeds = j.at("seeds").get<int>();
  r.averages = coeff_from(j.at("averages"));
  for (const auto& t : j.at("per_topic")) {
    TopicCorrelation tc{t.at("topic_id").get<std::string>(), coeff_from(t), t.at("n_summaries").get<int>(),
                        t.at("seeds_used").get<int>(), std::nullopt};
    if (t.contains("p_value")) tc.p_value = coeff_from(t.at("p_value"));
    r.per_topic.push_back(std::move(tc));
  }
  for (const auto& s : j.at("skipped"))
    r.skipped.push_back({s.at("topic_id").get<std::string>(), s.at("reason").get<std::string>()});
  if (const auto& sig = j.at("significance"); !sig.is_null()) {
    r.alpha = sig.at("alpha").get<double>();
    r.significant_share = coeff_from(sig.at("significant_share"));
  }
  return r;
}

void write_report_tsv(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << "metric_name\ttopic_id\tn_summaries\tpearson\tspearman\tkendall\tstatus\n";
  for (const auto& r : reports) {
    for (const auto& t : r.per_topic)
      out << r.metric_name << '\t' << t.topic_id << '\t' << t.n_summaries << '\t' << format_real(t.value.pearson) << '\t'
          << format_real(t.value.spearman) << '\t' << format_real(t.value.kendall) << "\tok\n";
    for (const auto& s : r.skipped)
      out << r.metric_name << '\t' << s.topic_id << "\t\t\t\t\tskipped: " << s.reason << '\n';
    out << r.metric_name << "\taverage\t" << r.per_topic.size() << '\t' << format_real(r.averages.pearson) << '\t'
        << format_real(r.averages.spearman) << '\t' << format_real(r.averages.kendall) << "\taverage\n";
  }
}

std::string format_grid(const std::vector<std::pair<std::string, std::vector<MetricReport>>>& datasets) {
  std::vector<std::string> metrics;
  for (const auto& [name, reports] : datasets)
    for (const auto& r : reports)
      if (std::find(metrics.begin(), metrics.end(), r.metric_name) == metrics.end()) metrics.push_back(r.metric_name);
  std::size_t width = 6;
  for (const auto& m : metrics) width = std::max(width, m.size());

  std::ostringstream ss;
  ss << std::left << std::setw(static_cast<int>(width)) << "metric";
  for (const auto& [name, reports] : datasets) ss << " | " << std::setw(20) << name;
  ss << '\n' << std::setw(static_cast<int>(width)) << "";
  for (std::size_t d = 0; d < datasets.size(); ++d) ss << " | " << std::setw(7) << "r" << std::setw(7) << "rho" << std::setw(6) << "tau";
  ss << '\n';
  for (const auto& m : metrics) {
    ss << std::setw(static_cast<int>(width)) << m;
    for (const auto& [name, reports] : datasets) {
      const auto it = std::find_if(reports.begin(), reports.end(), [&](const MetricReport& r) { return r.metric_name == m; });
      ss << " | ";
      if (it == reports.end()) {
        ss << std::setw(20) << "-";
      } else {
        ss << std::setw(7) << fixed(it->averages.pearson, 3) << std::setw(7) << fixed(it->averages.spearman, 3)
           << std::setw(6) << fixed(it->averages.kendall, 3);
      }
    }
    ss << '\n';
  }
  return ss.str();
}

}  // namespace pseval
