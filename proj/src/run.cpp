#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "pseval/run.hpp"
#include "pseval/synth.hpp"

#ifndef PSEVAL_VERSION
#define PSEVAL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace pseval {

// ---- logging ------------------------------------------------------------------

namespace {
std::atomic<int> g_log_level{1};
std::mutex g_log_mutex;
}  // namespace

void set_log_level(int level) { g_log_level = level; }

void log_info(const std::string& message) {
  if (g_log_level < 1) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[pseval] " << message << '\n';
}

void log_error(const std::string& message) {
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[pseval] error: " << message << '\n';
}

std::string toolkit_version() { return PSEVAL_VERSION; }

// ---- hashing and files ----------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return ss.str();
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string sha256_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::vector<std::string> lines;
  for (const auto& f : files) lines.push_back(fs::relative(f, root).generic_string() + '\t' + sha256_file(f) + '\n');
  std::sort(lines.begin(), lines.end());
  std::string all;
  for (const auto& l : lines) all += l;
  return sha256_hex(all);
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

// ---- config -------------------------------------------------------------------

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, const std::string& where, T& target) {
  if (obj.contains(key)) target = get_as<T>(obj, key, where);
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  check_keys(j, "config", {"corpus", "references", "embeddings", "strategies", "scorers", "supert", "harness", "rl", "jobs", "out"});
  if (j.contains("corpus")) {
    const auto& cj = j.at("corpus");
    check_keys(cj, "corpus", {"path", "format"});
    c.corpus = get_as<std::string>(cj, "path", "corpus");
    if (cj.contains("format")) c.format = parse_corpus_format(get_as<std::string>(cj, "format", "corpus"));
  }
  if (j.contains("references") && !j.at("references").is_null()) c.references = get_as<std::string>(j, "references", "config");
  if (j.contains("embeddings")) {
    const auto& e = j.at("embeddings");
    check_keys(e, "embeddings", {"kind", "path", "dimension", "seed", "include_stopwords"});
    const auto kind = e.contains("kind") ? get_as<std::string>(e, "kind", "embeddings") : "fallback";
    if (kind == "fallback") c.embeddings.kind = EmbeddingSource::Kind::fallback;
    else if (kind == "file") c.embeddings.kind = EmbeddingSource::Kind::file;
    else throw ValidationError("config: embeddings.kind must be 'fallback' or 'file'");
    if (e.contains("path")) c.embeddings.path = get_as<std::string>(e, "path", "embeddings");
    read_opt(e, "dimension", "embeddings", c.embeddings.fallback.dimension);
    read_opt(e, "seed", "embeddings", c.embeddings.fallback.seed);
    read_opt(e, "include_stopwords", "embeddings", c.embeddings.fallback.include_stopwords);
  }
  if (j.contains("strategies"))
    for (const auto& s : j.at("strategies")) c.strategies.push_back(parse_strategy(s.get<std::string>()));
  if (j.contains("scorers"))
    for (const auto& s : j.at("scorers")) c.scorers.push_back(parse_scorer_kind(s.get<std::string>()));
  if (j.contains("supert")) {
    const auto& s = j.at("supert");
    check_keys(s, "supert", {"mode", "idf_weights", "filter_stopwords", "exact_cell_limit"});
    if (s.contains("mode")) c.supert.mode = parse_wmd_mode(get_as<std::string>(s, "mode", "supert"));
    read_opt(s, "idf_weights", "supert", c.supert.idf_weights);
    read_opt(s, "filter_stopwords", "supert", c.supert.filter_stopwords);
    read_opt(s, "exact_cell_limit", "supert", c.supert.exact_cell_limit);
  }
  if (j.contains("harness")) {
    const auto& h = j.at("harness");
    check_keys(h, "harness", {"seeds", "significance", "permutations", "alpha"});
    if (h.contains("seeds")) {
      const auto& s = h.at("seeds");
      c.seeds.clear();
      if (s.is_number_integer()) {
        const auto n = s.get<long long>();
        if (n < 1) throw ValidationError("config: harness.seeds must be positive");
        for (long long i = 0; i < n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
      } else if (s.is_array()) {
        for (const auto& v : s) c.seeds.push_back(v.get<std::uint64_t>());
      } else {
        throw ValidationError("config: harness.seeds must be a count or a list");
      }
    }
    read_opt(h, "significance", "harness", c.significance);
    read_opt(h, "permutations", "harness", c.permutations);
    read_opt(h, "alpha", "harness", c.alpha);
  }
  if (j.contains("rl")) {
    const auto& r = j.at("rl");
    check_keys(r, "rl", {"rewards", "strategy", "episodes", "runs", "budget", "learning_rate", "epsilon_start",
                         "epsilon_end", "seed", "rouge"});
    if (r.contains("rewards")) {
      c.rl.rewards.clear();
      for (const auto& v : r.at("rewards")) c.rl.rewards.push_back(parse_reward_kind(v.get<std::string>()));
    }
    if (r.contains("strategy")) c.rl.strategy = parse_strategy(get_as<std::string>(r, "strategy", "rl"));
    read_opt(r, "episodes", "rl", c.rl.episodes);
    read_opt(r, "runs", "rl", c.rl.runs);
    read_opt(r, "budget", "rl", c.rl.budget);
    read_opt(r, "learning_rate", "rl", c.rl.learning_rate);
    read_opt(r, "epsilon_start", "rl", c.rl.epsilon_start);
    read_opt(r, "epsilon_end", "rl", c.rl.epsilon_end);
    read_opt(r, "seed", "rl", c.rl.seed);
    if (r.contains("rouge")) {
      const auto& ro = r.at("rouge");
      check_keys(ro, "rl.rouge", {"stem", "remove_stopwords"});
      read_opt(ro, "stem", "rl.rouge", c.rl.rouge.stem);
      read_opt(ro, "remove_stopwords", "rl.rouge", c.rl.rouge.remove_stopwords);
    }
  }
  read_opt(j, "jobs", "config", c.jobs);
  if (j.contains("out")) c.out = get_as<std::string>(j, "out", "config");
  return c;
}

json config_to_json(const RunConfig& c) {
  json strategies = json::array();
  for (const auto& s : c.strategies) strategies.push_back(s.name());
  json scorers = json::array();
  for (auto s : c.scorers) scorers.push_back(to_string(s));
  json rewards = json::array();
  for (auto r : c.rl.rewards) rewards.push_back(to_string(r));
  json emb{{"kind", c.embeddings.kind == EmbeddingSource::Kind::file ? "file" : "fallback"},
           {"include_stopwords", c.embeddings.fallback.include_stopwords}};
  if (c.embeddings.kind == EmbeddingSource::Kind::file) {
    emb["path"] = c.embeddings.path.generic_string();
  } else {
    emb["dimension"] = c.embeddings.fallback.dimension;
    emb["seed"] = c.embeddings.fallback.seed;
  }
  return json{
      {"corpus", {{"path", c.corpus.generic_string()}, {"format", c.format == CorpusFormat::jsonl ? "jsonl" : "plain_dirs"}}},
      {"references", c.references ? json(c.references->generic_string()) : json(nullptr)},
      {"embeddings", emb},
      {"strategies", strategies},
      {"scorers", scorers},
      {"supert",
       {{"mode", to_string(c.supert.mode)},
        {"idf_weights", c.supert.idf_weights},
        {"filter_stopwords", c.supert.filter_stopwords},
        {"exact_cell_limit", c.supert.exact_cell_limit}}},
      {"harness", {{"seeds", c.seeds}, {"significance", c.significance}, {"permutations", c.permutations}, {"alpha", c.alpha}}},
      {"rl",
       {{"rewards", rewards},
        {"strategy", c.rl.strategy.name()},
        {"episodes", c.rl.episodes},
        {"runs", c.rl.runs},
        {"budget", c.rl.budget},
        {"learning_rate", c.rl.learning_rate},
        {"epsilon_start", c.rl.epsilon_start},
        {"epsilon_end", c.rl.epsilon_end},
        {"seed", c.rl.seed},
        {"rouge", {{"stem", c.rl.rouge.stem}, {"remove_stopwords", c.rl.rouge.remove_stopwords}}}}},
      {"jobs", c.jobs},
  };
}

std::vector<MetricSpec> RunConfig::metrics() const {
  std::vector<MetricSpec> out;
  for (auto kind : scorers) {
    MetricSpec m;
    m.scorer = kind;
    m.supert = supert;
    if (m.needs_strategy()) {
      for (const auto& s : strategies) {
        m.strategy = s;
        out.push_back(m);
      }
    } else {
      out.push_back(m);
    }
  }
  return out;
}

namespace {

bool uses_embeddings(const RunConfig& c, const std::string& command) {
  if (command == "embed-fallback") return false;
  if (command == "rl") return true;
  if (command == "validate-corpus") return c.embeddings.kind == EmbeddingSource::Kind::file;
  const auto ms = c.metrics();
  return std::any_of(ms.begin(), ms.end(), [](const MetricSpec& m) { return m.needs_embeddings(); });
}

}  // namespace

void RunConfig::validate(const std::string& command) const {
  if (corpus.empty()) throw ValidationError("no corpus given");
  if (!fs::exists(corpus)) throw ValidationError("corpus path does not exist: " + corpus.string());
  if (command != "validate-corpus" && out.empty()) throw ValidationError("no output directory given (--out)");
  if (embeddings.kind == EmbeddingSource::Kind::file && uses_embeddings(*this, command)) {
    if (embeddings.path.empty()) throw ValidationError("embeddings.kind is 'file' but no path is given");
    if (!fs::is_regular_file(embeddings.path))
      throw ValidationError("embedding file does not exist: " + embeddings.path.string());
  }
  if (embeddings.kind == EmbeddingSource::Kind::fallback && embeddings.fallback.dimension < 2)
    throw ValidationError("fallback embedding dimension must be at least 2");
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
  for (const auto& s : strategies) s.validate();
  if (command == "evaluate" || command == "score") {
    if (metrics().empty()) throw ValidationError("no (strategy, scorer) pair to run: give scorers and, for supert/cosine_reference, strategies");
    if (seeds.empty()) throw ValidationError("harness.seeds is empty");
    if (permutations < 1) throw ValidationError("harness.permutations must be positive");
    if (!(alpha > 0 && alpha < 1)) throw ValidationError("harness.alpha must be in (0, 1)");
  }
  if (command == "rl") {
    if (!references) throw ValidationError("the rl command needs reference summaries (references)");
    if (!fs::is_regular_file(*references)) throw ValidationError("references file does not exist: " + references->string());
    if (rl.rewards.empty()) throw ValidationError("rl.rewards is empty");
    if (rl.episodes < 1 || rl.runs < 1 || rl.budget < 1) throw ValidationError("rl episodes, runs and budget must be positive");
    if (!(rl.learning_rate > 0)) throw ValidationError("rl.learning_rate must be positive");
    if (!(rl.epsilon_start >= 0 && rl.epsilon_start <= 1 && rl.epsilon_end >= 0 && rl.epsilon_end <= 1))
      throw ValidationError("rl epsilon values must be in [0, 1]");
    rl.strategy.validate();
  }
}

int exit_code_for(const std::exception& e) {
  log_error(e.what());
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 2;
  return 3;
}

// ---- pipeline pieces --------------------------------------------------------------

namespace {

std::vector<Topic> load_checked_corpus(const RunConfig& c) {
  auto corpus = load_corpus(c.corpus, c.format);
  for (const auto& t : corpus) validate_topic(t);
  log_info("loaded " + std::to_string(corpus.size()) + " topics from " + c.corpus.string());
  return corpus;
}

EmbeddingStore make_store(const RunConfig& c, const std::vector<Topic>& corpus) {
  if (c.embeddings.kind == EmbeddingSource::Kind::file) {
    auto store = load_embeddings(c.embeddings.path, corpus, {c.embeddings.fallback.include_stopwords});
    log_info("loaded " + std::to_string(store.size()) + " sentence embeddings of dimension " +
             std::to_string(store.dimension()));
    return store;
  }
  log_info("encoding with the fallback encoder (dimension " + std::to_string(c.embeddings.fallback.dimension) + ")");
  return encode_fallback(corpus, c.embeddings.fallback);
}

json input_entry(const std::string& role, const fs::path& p) {
  return json{{"role", role},
              {"path", p.generic_string()},
              {"sha256", fs::is_directory(p) ? sha256_tree(p) : sha256_file(p)}};
}

void write_manifest(const RunConfig& c, const std::string& command, const std::vector<std::string>& outputs) {
  const json cfg = config_to_json(c);
  json inputs = json::array();
  inputs.push_back(input_entry("corpus", c.corpus));
  if (c.embeddings.kind == EmbeddingSource::Kind::file && uses_embeddings(c, command))
    inputs.push_back(input_entry("embeddings", c.embeddings.path));
  if (c.references && command == "rl") inputs.push_back(input_entry("references", *c.references));
  json outs = json::array();
  for (const auto& name : outputs) outs.push_back({{"file", name}, {"sha256", sha256_file(c.out / name)}});
  const json manifest{{"toolkit", "pseval"},
                      {"version", toolkit_version()},
                      {"command", command},
                      {"stopword_list", std::string(kStopwordListVersion)},
                      {"config", cfg},
                      {"config_sha256", sha256_hex(cfg.dump())},
                      {"inputs", inputs},
                      {"outputs", outs}};
  write_file_atomic(c.out / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::uint64_t> seeds_for(const MetricSpec& m, const RunConfig& c) {
  return m.is_seeded() ? c.seeds : std::vector<std::uint64_t>{0};
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return exit_code_for(e);
  }
}

}  // namespace

int cmd_validate_corpus(const RunConfig& c) {
  return guarded([&] {
    c.validate("validate-corpus");
    const auto corpus = load_checked_corpus(c);
    std::size_t docs = 0, sentences = 0, degenerate = 0, summaries = 0, rated = 0;
    for (const auto& t : corpus) {
      docs += t.documents.size();
      for (const auto& d : t.documents) {
        sentences += d.sentences.size();
        for (const auto& s : d.sentences) degenerate += s.is_degenerate();
      }
      summaries += t.summaries.size();
      for (const auto& s : t.summaries) rated += s.human_rating.has_value();
    }
    json summary{{"topics", corpus.size()},         {"documents", docs},   {"source_sentences", sentences},
                 {"degenerate_sentences", degenerate}, {"summaries", summaries}, {"rated_summaries", rated}};
    if (c.embeddings.kind == EmbeddingSource::Kind::file) {
      const auto store = make_store(c, corpus);
      summary["embedding_dimension"] = store.dimension();
      summary["embedded_sentences"] = store.size();
    }
    std::cout << summary.dump() << '\n';
    if (!c.out.empty()) {
      std::ostringstream ss;
      write_corpus_jsonl(ss, corpus);
      write_file_atomic(c.out / "corpus.jsonl", ss.str());
      write_file_atomic(c.out / "corpus_summary.json", summary.dump(2) + "\n");
      write_manifest(c, "validate-corpus", {"corpus.jsonl", "corpus_summary.json"});
    }
    return 0;
  });
}

int cmd_embed_fallback(const RunConfig& c) {
  return guarded([&] {
    c.validate("embed-fallback");
    const auto corpus = load_checked_corpus(c);
    const auto store = encode_fallback(corpus, c.embeddings.fallback);
    std::ostringstream ss;
    write_embeddings(ss, store, corpus);
    write_file_atomic(c.out / "embeddings.jsonl", ss.str());
    write_manifest(c, "embed-fallback", {"embeddings.jsonl"});
    log_info("wrote " + std::to_string(store.size()) + " records to " + (c.out / "embeddings.jsonl").string());
    return 0;
  });
}

int cmd_score(const RunConfig& c) {
  return guarded([&] {
    c.validate("score");
    const auto corpus = load_checked_corpus(c);
    const auto metrics = c.metrics();
    const bool need_store = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.needs_embeddings(); });
    std::optional<EmbeddingStore> store;
    if (need_store) store = make_store(c, corpus);
    std::vector<ScoreRow> rows;
    for (const auto& m : metrics) {
      const auto scorer = make_scorer(m, store ? &*store : nullptr);
      const auto seeds = seeds_for(m, c);
      std::vector<std::vector<ScoreRow>> per_topic(corpus.size());
      parallel_for(corpus.size(), c.jobs, [&](std::size_t i) {
        const Topic& t = corpus[i];
        std::vector<const CandidateSummary*> all;
        for (const auto& s : t.summaries) all.push_back(&s);
        if (all.empty()) return;
        for (auto seed : seeds) {
          const auto scores = scorer(t, all, seed);
          const auto name = seeds.size() > 1 ? m.name() + "@seed=" + std::to_string(seed) : m.name();
          for (std::size_t k = 0; k < all.size(); ++k) per_topic[i].push_back({t.topic_id, all[k]->summary_id, name, scores[k]});
        }
      });
      for (auto& v : per_topic) rows.insert(rows.end(), v.begin(), v.end());
      log_info("scored " + m.name());
    }
    std::ostringstream ss;
    write_score_tsv(ss, std::move(rows));
    write_file_atomic(c.out / "scores.tsv", ss.str());
    write_manifest(c, "score", {"scores.tsv"});
    return 0;
  });
}

int cmd_evaluate(const RunConfig& c) {
  return guarded([&] {
    c.validate("evaluate");
    const auto corpus = load_checked_corpus(c);
    const auto metrics = c.metrics();
    const bool need_store = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.needs_embeddings(); });
    std::optional<EmbeddingStore> store;
    if (need_store) store = make_store(c, corpus);

    std::vector<MetricReport> reports;
    std::vector<ScoreRow> rows;
    for (const auto& m : metrics) {
      HarnessOptions h;
      h.seeds = seeds_for(m, c);
      h.significance = c.significance;
      h.permutations = c.permutations;
      h.alpha = c.alpha;
      h.jobs = c.jobs;
      auto ev = evaluate_metric(corpus, m.name(), make_scorer(m, store ? &*store : nullptr), h);
      log_info(m.name() + ": tau " + format_real(ev.report.averages.kendall) + " over " +
               std::to_string(ev.report.per_topic.size()) + " topics");
      rows.insert(rows.end(), ev.scores.begin(), ev.scores.end());
      reports.push_back(std::move(ev.report));
    }

    std::ostringstream scores, tsv;
    write_score_tsv(scores, std::move(rows));
    write_report_tsv(tsv, reports);
    json rj{{"reports", json::array()}};
    for (const auto& r : reports) rj["reports"].push_back(report_to_json(r));
    const std::string grid = format_grid({{c.corpus.filename().string(), reports}});

    write_file_atomic(c.out / "scores.tsv", scores.str());
    write_file_atomic(c.out / "report.tsv", tsv.str());
    write_file_atomic(c.out / "report.json", rj.dump(2) + "\n");
    write_file_atomic(c.out / "grid.txt", grid);
    write_manifest(c, "evaluate", {"scores.tsv", "report.tsv", "report.json", "grid.txt"});
    std::cout << grid;
    return 0;
  });
}

int cmd_rl(const RunConfig& c) {
  return guarded([&] {
    c.validate("rl");
    const auto corpus = load_checked_corpus(c);
    const auto refs = load_references(*c.references);
    std::map<std::string, std::vector<std::vector<std::string>>> ref_tokens;
    for (const auto& r : refs) ref_tokens[r.topic_id].push_back(rouge_tokens(r.text, c.rl.rouge));
    for (const auto& t : corpus)
      if (!ref_tokens.contains(t.topic_id)) throw ValidationError("no reference summary for topic " + t.topic_id);
    // The value function's features use sentence vectors whatever the reward.
    const std::optional<EmbeddingStore> store = make_store(c, corpus);

    std::ostringstream runs_tsv, avg_tsv, picks;
    const char* header = "reward\trun\tR1\tR2\tRL\tR1_F1\tR2_F1\tRL_F1\n";
    runs_tsv << header;
    avg_tsv << header;
    for (auto kind : c.rl.rewards) {
      RewardSpec spec;
      spec.kind = kind;
      spec.strategy = c.rl.strategy;
      spec.supert = c.supert;
      std::array<double, 6> total{};
      for (int run = 0; run < c.rl.runs; ++run) {
        std::vector<std::array<double, 6>> per_topic(corpus.size());
        std::vector<ExtractState> states(corpus.size());
        parallel_for(corpus.size(), c.jobs, [&](std::size_t i) {
          const Topic& t = corpus[i];
          const RewardFunction reward(t, store ? &*store : nullptr, spec);
          const FeatureMap fm(t, *store, c.rl.budget);
          TrainOptions to;
          to.episodes = c.rl.episodes;
          to.learning_rate = c.rl.learning_rate;
          to.epsilon_start = c.rl.epsilon_start;
          to.epsilon_end = c.rl.epsilon_end;
          to.budget = c.rl.budget;
          to.seed = c.rl.seed + static_cast<std::uint64_t>(run);
          const auto vf = train(fm, reward, to);
          states[i] = rollout(fm, vf);
          const auto cand = rouge_tokens(sentence_ptrs(selection_units(t, in_document_order(states[i].selected, t))), c.rl.rouge);
          const auto& refs_t = ref_tokens.at(t.topic_id);
          const auto r1 = rouge(cand, refs_t, RougeVariant::r1);
          const auto r2 = rouge(cand, refs_t, RougeVariant::r2);
          const auto rl = rouge(cand, refs_t, RougeVariant::rl);
          per_topic[i] = {r1.recall, r2.recall, rl.recall, r1.f1, r2.f1, rl.f1};
        });
        std::array<double, 6> mean{};
        for (const auto& row : per_topic)
          for (std::size_t k = 0; k < 6; ++k) mean[k] += row[k] / static_cast<double>(corpus.size());
        runs_tsv << to_string(kind) << '\t' << run;
        for (double v : mean) runs_tsv << '\t' << format_real(v);
        runs_tsv << '\n';
        for (std::size_t k = 0; k < 6; ++k) total[k] += mean[k] / c.rl.runs;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          json sel = json::array();
          for (const auto& p : in_document_order(states[i].selected, corpus[i])) sel.push_back(json::array({p.doc_id, p.sent_idx}));
          picks << json{{"reward", to_string(kind)}, {"run", run}, {"topic_id", corpus[i].topic_id},
                        {"word_count", states[i].word_count}, {"picks", sel}}.dump()
                << '\n';
        }
        log_info("rl reward " + to_string(kind) + " run " + std::to_string(run) + " done");
      }
      runs_tsv << to_string(kind) << "\taverage";
      avg_tsv << to_string(kind) << "\taverage";
      for (double v : total) {
        runs_tsv << '\t' << format_real(v);
        avg_tsv << '\t' << format_real(v);
      }
      runs_tsv << '\n';
      avg_tsv << '\n';
    }
    write_file_atomic(c.out / "rouge_runs.tsv", runs_tsv.str());
    write_file_atomic(c.out / "rouge_average.tsv", avg_tsv.str());
    write_file_atomic(c.out / "summaries.jsonl", picks.str());
    write_manifest(c, "rl", {"rouge_runs.tsv", "rouge_average.tsv", "summaries.jsonl"});
    std::cout << avg_tsv.str();
    return 0;
  });
}

int cmd_report(const std::vector<fs::path>& run_dirs, const std::optional<fs::path>& out) {
  return guarded([&] {
    if (run_dirs.empty()) throw ValidationError("report needs at least one run directory");
    std::vector<std::pair<std::string, std::vector<MetricReport>>> datasets;
    for (const auto& dir : run_dirs) {
      const auto path = dir / "report.json";
      if (!fs::is_regular_file(path)) throw ValidationError("no report.json in " + dir.string());
      json j;
      try {
        j = json::parse(read_file(path));
      } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 1, e.what());
      }
      std::vector<MetricReport> reports;
      for (const auto& r : j.at("reports")) reports.push_back(report_from_json(r));
      auto name = dir.filename().string();
      if (name.empty()) name = dir.parent_path().filename().string();
      datasets.emplace_back(name, std::move(reports));
    }
    const auto grid = format_grid(datasets);
    if (out) write_file_atomic(*out / "grid.txt", grid);
    std::cout << grid;
    return 0;
  });
}

}  // namespace pseval
