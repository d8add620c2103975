#ifndef PSEVAL_PSEUDOREF_HPP
#define PSEVAL_PSEUDOREF_HPP

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pseval/corpus.hpp"
#include "pseval/embed.hpp"
#include "pseval/simgraph.hpp"

namespace pseval {

struct SentenceRef {
  std::string doc_id;
  int sent_idx = 0;

  auto operator<=>(const SentenceRef&) const = default;
};

enum class StrategyKind { random_n, top_n, slr, sc, sps, tc };
enum class GraphScope { individual, global };
enum class CliqueMode { maximal, components };

struct StrategySpec {
  StrategyKind kind = StrategyKind::top_n;
  GraphScope scope = GraphScope::individual;
  int n = 10;                 // random_n, top_n, tc
  int k = 10;                 // per-document cut (slr, sps individual)
  int m = 90;                 // topic-wide cut (slr, sps global)
  double threshold = 0.75;    // tc "highly similar"
  std::optional<std::uint64_t> seed;
  CliqueMode clique_mode = CliqueMode::maximal;
  LexRankOptions lexrank;
  AffinityOptions affinity;
  PacSumOptions pacsum;

  // Throws ValidationError.
  void validate() const;
  bool needs_embeddings() const { return kind != StrategyKind::random_n && kind != StrategyKind::top_n; }
  // Canonical name, e.g. "top_n:n=10", "slr:global:m=90", "tc:n=10:threshold=0.75".
  std::string name() const;
};

// Accepts canonical names and the short forms top10, random5, slr_i, slr_g,
// sc_i, sc_g, sps_i, sps_g, tc. Throws ValidationError.
StrategySpec parse_strategy(const std::string& text);

struct PseudoReference {
  std::string topic_id;
  std::vector<SentenceRef> picks;  // document order, then position
  StrategySpec strategy;
};

PseudoReference build_random(const Topic& topic, int n, std::uint64_t seed);
PseudoReference build_top_n(const Topic& topic, int n);
PseudoReference build_lexrank(const Topic& topic, const EmbeddingStore& store, GraphScope scope, int k = 10,
                              int m = 90, const LexRankOptions& options = {});
PseudoReference build_affinity(const Topic& topic, const EmbeddingStore& store, GraphScope scope,
                               const AffinityOptions& options = {});
PseudoReference build_pacsum(const Topic& topic, const EmbeddingStore& store, GraphScope scope, int k = 10,
                             int m = 90, const PacSumOptions& options = {});
PseudoReference build_top_clique(const Topic& topic, const EmbeddingStore& store, int n = 10,
                                 double threshold = 0.75, CliqueMode mode = CliqueMode::maximal);

// Dispatches on spec.kind. `store` may be null for random_n and top_n.
// random_n without a pinned seed uses `fallback_seed`.
PseudoReference build_pseudo_reference(const Topic& topic, const EmbeddingStore* store, const StrategySpec& spec,
                                       std::uint64_t fallback_seed = 0);

// Throws ValidationError when a pick is duplicated, missing from the topic or out of order.
void validate_pseudo_reference(const PseudoReference& ref, const Topic& topic);

void write_pseudo_references(std::ostream& out, const std::vector<PseudoReference>& refs);
std::vector<PseudoReference> read_pseudo_references(std::istream& in, const std::string& source_name);

}  // namespace pseval

#endif  // PSEVAL_PSEUDOREF_HPP
