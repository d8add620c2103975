// Writes the synthetic evaluation corpus: corpus.jsonl and references.jsonl.
//   pseval_synth OUT_DIR [--seed N] [--topics N]

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pseval/run.hpp"
#include "pseval/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic corpus with planted summary quality"};
  std::string out;
  pseval::SyntheticOptions opt;
  app.add_option("out", out, "output directory")->required();
  app.add_option("--seed", opt.seed, "generator seed");
  app.add_option("--topics", opt.topics, "number of topics");
  app.add_option("--summaries", opt.summaries, "candidate summaries per topic");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto corpus = pseval::make_synthetic_corpus(opt);
    std::ostringstream refs;
    pseval::write_references_jsonl(refs, corpus.references);
    pseval::write_file_atomic(std::filesystem::path(out) / "corpus.jsonl", corpus.corpus_jsonl);
    pseval::write_file_atomic(std::filesystem::path(out) / "references.jsonl", refs.str());
  } catch (const std::exception& e) {
    return pseval::exit_code_for(e);
  }
  return 0;
}
