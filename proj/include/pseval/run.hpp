#ifndef PSEVAL_RUN_HPP
#define PSEVAL_RUN_HPP

// Pipelines behind the command-line subcommands. Each cmd_* returns the
// process exit code: 0 on success, 2 on validation failure, 3 on runtime failure.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pseval/corpus.hpp"
#include "pseval/embed.hpp"
#include "pseval/evalharness.hpp"
#include "pseval/pseudoref.hpp"
#include "pseval/rlsum.hpp"
#include "pseval/scorers.hpp"

namespace pseval {

struct EmbeddingSource {
  enum class Kind { fallback, file } kind = Kind::fallback;
  std::filesystem::path path;  // kind == file
  FallbackConfig fallback;     // kind == fallback; include_stopwords also applies to files
};

struct RlConfig {
  std::vector<RewardKind> rewards{RewardKind::supert, RewardKind::js};
  StrategySpec strategy = RewardSpec::default_strategy();
  int episodes = 3000;
  int runs = 10;
  int budget = 100;
  double learning_rate = 0.001;
  double epsilon_start = 0.3;
  double epsilon_end = 0.01;
  std::uint64_t seed = 0;
  RougeTokenOptions rouge;
};

struct RunConfig {
  std::filesystem::path corpus;
  CorpusFormat format = CorpusFormat::jsonl;
  std::optional<std::filesystem::path> references;
  EmbeddingSource embeddings;
  std::vector<StrategySpec> strategies;
  std::vector<ScorerKind> scorers;
  SupertOptions supert;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};  // for unseeded random strategies
  bool significance = false;
  int permutations = 1000;
  double alpha = 0.05;
  RlConfig rl;
  int jobs = 1;
  std::filesystem::path out;

  // Throws ValidationError. `for_command` is the subcommand name.
  void validate(const std::string& for_command) const;
  // Every (scorer, strategy) pair: strategy-based scorers once per strategy,
  // the others once.
  std::vector<MetricSpec> metrics() const;
};

// Reads the declarative config; unknown keys are rejected. Throws ValidationError.
RunConfig config_from_json(const nlohmann::json& j);
// Canonical form (everything except `out`), the basis of the config hash.
nlohmann::json config_to_json(const RunConfig& config);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
// Hash over every file below a directory: sorted relative paths and their hashes.
std::string sha256_tree(const std::filesystem::path& root);

// Writes to a temporary sibling then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Logging to standard error; level 0 = quiet, 1 = info, 2 = debug.
void set_log_level(int level);
void log_info(const std::string& message);
void log_error(const std::string& message);

std::string toolkit_version();

int cmd_validate_corpus(const RunConfig& config);
int cmd_embed_fallback(const RunConfig& config);
int cmd_score(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_rl(const RunConfig& config);
// Prints the metric grid for the report.json files of the given run directories.
int cmd_report(const std::vector<std::filesystem::path>& run_dirs, const std::optional<std::filesystem::path>& out);

// Maps an exception to an exit code after logging it.
int exit_code_for(const std::exception& e);

}  // namespace pseval

#endif  // PSEVAL_RUN_HPP
