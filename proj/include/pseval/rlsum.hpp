#ifndef PSEVAL_RLSUM_HPP
#define PSEVAL_RLSUM_HPP

// Extractive summarization as an episodic MDP: an action adds one source
// sentence, actions that would overshoot the word budget are masked, and the
// episode ends when nothing else fits. A linear TD(0) learner over afterstate
// features stands in for a neural value network.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pseval/corpus.hpp"
#include "pseval/embed.hpp"
#include "pseval/pseudoref.hpp"
#include "pseval/scorers.hpp"

namespace pseval {

struct ExtractState {
  std::vector<SentenceRef> selected;  // in selection order
  int word_count = 0;
  bool terminal = false;

  bool operator==(const ExtractState&) const = default;
};

// Empty selection; terminal at once if no sentence fits the budget.
ExtractState initial_state(const Topic& topic, int budget = 100);

// Unselected sentences that fit the remaining budget, in (document order, position) order.
std::vector<SentenceRef> available_actions(const ExtractState& state, const Topic& topic, int budget = 100);

// Throws ValidationError on a duplicate or unknown action or a terminal
// state, and BudgetError when the sentence does not fit.
ExtractState step(const ExtractState& state, const SentenceRef& action, const Topic& topic, int budget = 100);

// Selected sentences in document order, the order summaries are assembled in.
std::vector<SentenceRef> in_document_order(const std::vector<SentenceRef>& picks, const Topic& topic);

enum class RewardKind { supert, js };

RewardKind parse_reward_kind(std::string_view name);
std::string to_string(RewardKind kind);

struct RewardSpec {
  RewardKind kind = RewardKind::supert;
  StrategySpec strategy = default_strategy();
  SupertOptions supert;

  static StrategySpec default_strategy() {
    StrategySpec s;
    s.kind = StrategyKind::top_n;
    s.n = 10;
    return s;
  }
};

// Terminal reward of a topic, with the per-topic work (pseudo reference,
// token costs, source statistics) done once and results memoized.
// Not thread-safe; use one instance per training run.
class RewardFunction {
 public:
  RewardFunction(const Topic& topic, const EmbeddingStore* store, const RewardSpec& spec);
  ~RewardFunction();
  RewardFunction(RewardFunction&&) noexcept;
  RewardFunction& operator=(RewardFunction&&) noexcept;

  double operator()(const std::vector<SentenceRef>& selection) const;
  const RewardSpec& spec() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Scores the summary assembled from the selected sentences with the configured scorer.
double terminal_reward(const ExtractState& state, const Topic& topic, const EmbeddingStore* store,
                       const RewardSpec& reward);

// Afterstate features: bias, length ratio, selection size / 10, cosine of the
// mean selected sentence vector to the topic centroid, mean relative position,
// redundancy (max pairwise cosine), stem coverage (cosine of selection and
// source term frequencies), then the mean selected sentence vector.
class FeatureMap {
 public:
  static constexpr int kStatCount = 7;

  FeatureMap(const Topic& topic, const EmbeddingStore& store, int budget = 100);

  int dimension() const { return kStatCount + embedding_dim_; }
  int budget() const { return budget_; }
  const Topic& topic() const { return *topic_; }
  std::size_t sentence_count() const { return refs_.size(); }
  const std::vector<SentenceRef>& sentences() const { return refs_; }
  int index_of(const SentenceRef& ref) const;

  // Incremental summary of a selection.
  struct Aggregate {
    std::vector<int> members;  // flat sentence indices
    int words = 0;
    Eigen::VectorXd vec_sum;
    double vec_norm2 = 0;
    double dot_centroid = 0;
    double position_sum = 0;
    double redundancy = 0;
    std::vector<double> tf;  // dense over the topic vocabulary
    double tf_norm2 = 0;
    double tf_dot_source = 0;
  };

  Aggregate empty() const;
  Aggregate add(const Aggregate& agg, int sentence) const;
  Eigen::VectorXd features(const Aggregate& agg) const;
  // Features of agg + sentence without materializing the aggregate.
  void afterstate_features(const Aggregate& agg, int sentence, Eigen::Ref<Eigen::VectorXd> out) const;
  int words(int sentence) const { return words_[static_cast<std::size_t>(sentence)]; }

 private:
  const Topic* topic_;
  int budget_;
  int embedding_dim_;
  std::vector<SentenceRef> refs_;
  std::vector<int> words_;
  std::vector<double> rel_position_;
  Eigen::MatrixXd vectors_;  // dim x n
  Eigen::MatrixXd gram_;     // n x n inner products
  Eigen::MatrixXd cos_;      // n x n cosines
  Eigen::VectorXd centroid_dot_;
  double centroid_norm_ = 0;
  std::vector<std::vector<std::pair<int, double>>> stems_;  // per sentence: (vocab index, count)
  std::vector<double> source_tf_;
  double source_norm_ = 0;
  std::vector<double> self_dot_source_;  // per sentence: sum count * source_tf
  std::vector<double> self_norm2_;       // per sentence: sum count^2

  void fill(double words, int count, const Eigen::VectorXd& sum, double norm2, double dot_c, double pos_sum,
            double redundancy, double tf_norm2, double tf_dot_source, Eigen::Ref<Eigen::VectorXd> out) const;
};

struct ValueFunction {
  Eigen::VectorXd weights;
  double learning_rate = 0.001;
  double epsilon = 0.3;

  double value(const Eigen::VectorXd& features) const { return weights.dot(features); }
};

struct TrainOptions {
  int episodes = 3000;
  double learning_rate = 0.001;
  double epsilon_start = 0.3;
  double epsilon_end = 0.01;
  int budget = 100;
  std::uint64_t seed = 0;
};

// Linear TD(0) over afterstates with epsilon-greedy exploration (epsilon
// decays linearly over the episodes). Throws TrainingError on non-finite weights.
ValueFunction train(const FeatureMap& features, const RewardFunction& reward, const TrainOptions& options = {});

// Greedy episode; ties go to the earliest sentence in (document order, position).
ExtractState rollout(const FeatureMap& features, const ValueFunction& vf);

// Uniformly random valid actions until terminal.
ExtractState random_rollout(const Topic& topic, std::uint64_t seed, int budget = 100);

// ---- ROUGE ----------------------------------------------------------------------

enum class RougeVariant { r1, r2, rl };

struct RougeScore {
  double recall = 0;
  double precision = 0;
  double f1 = 0;
};

// Clipped n-gram overlap (r1, r2) or LCS (rl); per-reference scores are
// averaged. Empty candidate gives (0, 0, 0). Throws ValidationError when no
// reference is non-empty.
RougeScore rouge(const std::vector<std::string>& candidate, const std::vector<std::vector<std::string>>& references,
                 RougeVariant variant);

struct RougeTokenOptions {
  bool remove_stopwords = false;
  bool stem = true;
};

// Token sequence of a text under the toolkit's tokenizer.
std::vector<std::string> rouge_tokens(const std::vector<const SentenceRecord*>& sentences,
                                      const RougeTokenOptions& options = {});
std::vector<std::string> rouge_tokens(std::string_view text, const RougeTokenOptions& options = {});

}  // namespace pseval

#endif  // PSEVAL_RLSUM_HPP
