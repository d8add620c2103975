#ifndef PSEVAL_EVALHARNESS_HPP
#define PSEVAL_EVALHARNESS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pseval/corpus.hpp"
#include "pseval/embed.hpp"
#include "pseval/pseudoref.hpp"
#include "pseval/scorers.hpp"

namespace pseval {

struct Coefficients {
  double pearson = 0;
  double spearman = 0;
  double kendall = 0;
};

struct TopicCorrelation {
  std::string topic_id;
  Coefficients value;
  int n_summaries = 0;
  int seeds_used = 0;                  // seeds in which the topic was not degenerate
  std::optional<Coefficients> p_value;  // permutation test, averaged over seeds
};

struct SkippedTopic {
  std::string topic_id;
  std::string reason;
};

struct MetricReport {
  std::string metric_name;
  std::vector<TopicCorrelation> per_topic;  // sorted by topic_id
  Coefficients averages;
  std::vector<SkippedTopic> skipped;        // sorted by topic_id
  int seeds = 1;
  // Share of topics whose permutation p-value is below `alpha`, per coefficient.
  std::optional<Coefficients> significant_share;
  double alpha = 0.05;
};

// Scores the given summaries of one topic; `seed` varies between runs of a
// seeded strategy and is ignored otherwise.
using TopicScorer =
    std::function<std::vector<double>(const Topic& topic, const std::vector<const CandidateSummary*>& summaries,
                                      std::uint64_t seed)>;

struct HarnessOptions {
  std::vector<std::uint64_t> seeds{0};
  bool significance = false;
  int permutations = 1000;
  double alpha = 0.05;
  std::uint64_t permutation_seed = 0;
  int jobs = 1;
  int min_summaries = 3;
};

// Correlations of one topic; throws DegenerateInputError on constant scores or ratings.
Coefficients correlate(const std::vector<double>& scores, const std::vector<double>& ratings);

// Two-sided permutation p-values: (1 + #{|stat(shuffled)| >= |stat|}) / (1 + permutations).
Coefficients permutation_p_values(const std::vector<double>& scores, const std::vector<double>& ratings,
                                  int permutations, std::uint64_t seed);

// Every ScoreRow produced while evaluating, in addition to the report.
struct Evaluation {
  MetricReport report;
  std::vector<ScoreRow> scores;
};

// Per topic, scores the rated summaries and correlates against the ratings;
// topics with fewer than min_summaries rated summaries or degenerate scores
// are skipped with a reason. Averages are taken over the non-skipped topics
// of each seed, then over seeds. Throws EmptyReportError when no topic is usable.
Evaluation evaluate_metric(const std::vector<Topic>& corpus, const std::string& metric_name, const TopicScorer& scorer,
                           const HarnessOptions& options = {});

// ---- metrics built from the toolkit's scorers --------------------------------

enum class ScorerKind { supert, cosine_reference, cosine_source, tfidf, js };

struct MetricSpec {
  ScorerKind scorer = ScorerKind::supert;
  StrategySpec strategy;  // used by supert and cosine_reference
  SupertOptions supert;

  bool needs_embeddings() const;
  bool needs_strategy() const { return scorer == ScorerKind::supert || scorer == ScorerKind::cosine_reference; }
  // True when the strategy draws random sentences without a pinned seed.
  bool is_seeded() const;
  // e.g. "supert[top_n:n=10]", "js", "cosine_source".
  std::string name() const;
};

ScorerKind parse_scorer_kind(std::string_view name);
std::string to_string(ScorerKind kind);

// Throws ValidationError when embeddings are needed but `store` is null.
TopicScorer make_scorer(const MetricSpec& spec, const EmbeddingStore* store);

// ---- output -----------------------------------------------------------------

nlohmann::json report_to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);

// One row per topic plus an "average" row and one row per skipped topic.
void write_report_tsv(std::ostream& out, const std::vector<MetricReport>& reports);

// Metric x {r, rho, tau} grid, one column group per dataset.
std::string format_grid(const std::vector<std::pair<std::string, std::vector<MetricReport>>>& datasets);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are rethrown
// (the one from the lowest index wins) after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace pseval

#endif  // PSEVAL_EVALHARNESS_HPP
