// pseval: command-line front end. Machine-readable results go to files under
// --out (and the grid / summary tables to stdout); logs go to stderr.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "pseval/run.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Overrides {
  std::string config_file;
  std::optional<std::string> corpus, format, references, embeddings, out;
  std::optional<int> fallback_dim, jobs, seeds, episodes, runs, budget;
  std::optional<std::uint64_t> fallback_seed, rl_seed;
  std::vector<std::string> strategies, scorers, rewards;
  std::optional<std::string> wmd_mode, rl_strategy;
  bool significance = false;
  bool uniform_weights = false;
  bool include_stopwords = false;
  bool quiet = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config_file, "JSON config file (flags override it)");
  app->add_option("--corpus", o.corpus, "corpus root (directory for plain_dirs, file for jsonl)");
  app->add_option("--format", o.format, "corpus format: plain_dirs or jsonl");
  app->add_option("--embeddings", o.embeddings, "embedding file (JSON Lines); default is the fallback encoder");
  app->add_option("--fallback-dim", o.fallback_dim, "fallback encoder dimension");
  app->add_option("--fallback-seed", o.fallback_seed, "fallback encoder seed");
  app->add_flag("--include-stopwords", o.include_stopwords, "keep token vectors for stopwords");
  app->add_option("--out", o.out, "output directory");
  app->add_option("-j,--jobs", o.jobs, "worker threads (parallel over topics)");
  app->add_flag("-q,--quiet", o.quiet, "only log errors");
}

void add_metrics(CLI::App* app, Overrides& o) {
  app->add_option("-s,--strategy", o.strategies, "pseudo-reference strategy, e.g. top_n:n=10, slr_g, tc (repeatable)");
  app->add_option("--scorer", o.scorers, "supert, cosine_reference, cosine_source, tfidf or js (repeatable)");
  app->add_option("--wmd", o.wmd_mode, "WMD mode: exact, relaxed or auto");
  app->add_flag("--uniform-weights", o.uniform_weights, "uniform instead of idf token weights for supert");
  app->add_option("--seeds", o.seeds, "number of seeds for unseeded random strategies");
}

pseval::RunConfig resolve(const Overrides& o) {
  json j = json::object();
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw pseval::ValidationError("cannot open config file " + o.config_file);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw pseval::ParseError(o.config_file, 1, e.what());
    }
  }
  auto c = pseval::config_from_json(j);
  if (o.corpus) c.corpus = *o.corpus;
  if (o.format) c.format = pseval::parse_corpus_format(*o.format);
  if (o.references) c.references = fs::path(*o.references);
  if (o.embeddings) {
    c.embeddings.kind = pseval::EmbeddingSource::Kind::file;
    c.embeddings.path = *o.embeddings;
  }
  if (o.fallback_dim) c.embeddings.fallback.dimension = *o.fallback_dim;
  if (o.fallback_seed) c.embeddings.fallback.seed = *o.fallback_seed;
  if (o.include_stopwords) c.embeddings.fallback.include_stopwords = true;
  if (o.out) c.out = *o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.strategies.empty()) {
    c.strategies.clear();
    for (const auto& s : o.strategies) c.strategies.push_back(pseval::parse_strategy(s));
  }
  if (!o.scorers.empty()) {
    c.scorers.clear();
    for (const auto& s : o.scorers) c.scorers.push_back(pseval::parse_scorer_kind(s));
  }
  if (o.wmd_mode) c.supert.mode = pseval::parse_wmd_mode(*o.wmd_mode);
  if (o.uniform_weights) c.supert.idf_weights = false;
  if (o.seeds) {
    if (*o.seeds < 1) throw pseval::ValidationError("--seeds must be positive");
    c.seeds.clear();
    for (int i = 0; i < *o.seeds; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  if (o.significance) c.significance = true;
  if (!o.rewards.empty()) {
    c.rl.rewards.clear();
    for (const auto& r : o.rewards) c.rl.rewards.push_back(pseval::parse_reward_kind(r));
  }
  if (o.rl_strategy) c.rl.strategy = pseval::parse_strategy(*o.rl_strategy);
  if (o.episodes) c.rl.episodes = *o.episodes;
  if (o.runs) c.rl.runs = *o.runs;
  if (o.budget) c.rl.budget = *o.budget;
  if (o.rl_seed) c.rl.seed = *o.rl_seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-free summary evaluation with pseudo references"};
  app.set_version_flag("--version", pseval::toolkit_version());
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::string> report_dirs;
  std::optional<std::string> report_out;

  auto* validate = app.add_subcommand("validate-corpus", "load and check a corpus (and an embedding file, if given)");
  add_common(validate, o);

  auto* embed = app.add_subcommand("embed-fallback", "write fallback-encoder embeddings in the embedding file format");
  add_common(embed, o);

  auto* score = app.add_subcommand("score", "score every candidate summary with every metric");
  add_common(score, o);
  add_metrics(score, o);

  auto* evaluate = app.add_subcommand("evaluate", "correlate metric scores with human ratings");
  add_common(evaluate, o);
  add_metrics(evaluate, o);
  evaluate->add_flag("--significance", o.significance, "add permutation-test p-values");

  auto* rl = app.add_subcommand("rl", "train the extractive summarizer with each reward and report ROUGE");
  add_common(rl, o);
  rl->add_option("--references", o.references, "reference summaries (JSON Lines: topic_id, ref_id, text)");
  rl->add_option("--reward", o.rewards, "supert or js (repeatable)");
  rl->add_option("--reward-strategy", o.rl_strategy, "pseudo-reference strategy of the supert reward");
  rl->add_option("--wmd", o.wmd_mode, "WMD mode of the supert reward");
  rl->add_option("--episodes", o.episodes, "training episodes per run");
  rl->add_option("--runs", o.runs, "independent runs (seeds) per reward");
  rl->add_option("--budget", o.budget, "summary word budget");
  rl->add_option("--seed", o.rl_seed, "seed of the first run");

  auto* report = app.add_subcommand("report", "print the metric grid of one or more evaluate runs");
  report->add_option("dirs", report_dirs, "evaluate output directories")->required();
  report->add_option("--out", report_out, "also write grid.txt here");
  report->add_flag("-q,--quiet", o.quiet, "only log errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  pseval::set_log_level(o.quiet ? 0 : 1);

  if (report->parsed()) {
    std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
    return pseval::cmd_report(dirs, report_out ? std::optional<fs::path>(*report_out) : std::nullopt);
  }

  pseval::RunConfig config;
  try {
    config = resolve(o);
  } catch (const std::exception& e) {
    return pseval::exit_code_for(e);
  }
  if (validate->parsed()) return pseval::cmd_validate_corpus(config);
  if (embed->parsed()) return pseval::cmd_embed_fallback(config);
  if (score->parsed()) return pseval::cmd_score(config);
  if (evaluate->parsed()) return pseval::cmd_evaluate(config);
  if (rl->parsed()) return pseval::cmd_rl(config);
  return 2;
}
