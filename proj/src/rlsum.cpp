#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "pseval/random.hpp"
#include "pseval/rlsum.hpp"

namespace pseval {

// ---- MDP ----------------------------------------------------------------------

namespace {

bool is_selected(const ExtractState& state, const SentenceRef& ref) {
  return std::find(state.selected.begin(), state.selected.end(), ref) != state.selected.end();
}

}  // namespace

std::vector<SentenceRef> available_actions(const ExtractState& state, const Topic& topic, int budget) {
  std::vector<SentenceRef> out;
  if (state.terminal) return out;
  const int room = budget - state.word_count;
  for (const auto& d : topic.documents) {
    for (const auto& s : d.sentences) {
      SentenceRef ref{d.doc_id, s.sent_idx};
      if (s.word_count <= room && !is_selected(state, ref)) out.push_back(std::move(ref));
    }
  }
  return out;
}

ExtractState initial_state(const Topic& topic, int budget) {
  ExtractState s;
  s.terminal = available_actions(s, topic, budget).empty();
  return s;
}

ExtractState step(const ExtractState& state, const SentenceRef& action, const Topic& topic, int budget) {
  if (state.terminal) throw ValidationError("cannot act in a terminal state");
  const int d = topic.document_index(action.doc_id);
  if (d < 0 || action.sent_idx < 0 ||
      static_cast<std::size_t>(action.sent_idx) >= topic.documents[static_cast<std::size_t>(d)].sentences.size())
    throw ValidationError("action " + action.doc_id + "/" + std::to_string(action.sent_idx) + " is not in the topic");
  if (is_selected(state, action))
    throw ValidationError("sentence " + action.doc_id + "/" + std::to_string(action.sent_idx) + " is already selected");
  const int words = topic.documents[static_cast<std::size_t>(d)].sentences[static_cast<std::size_t>(action.sent_idx)].word_count;
  if (state.word_count + words > budget)
    throw BudgetError("sentence of " + std::to_string(words) + " words overshoots the budget of " +
                      std::to_string(budget) + " (" + std::to_string(state.word_count) + " used)");
  ExtractState next = state;
  next.selected.push_back(action);
  next.word_count += words;
  next.terminal = available_actions(next, topic, budget).empty();
  return next;
}

std::vector<SentenceRef> in_document_order(const std::vector<SentenceRef>& picks, const Topic& topic) {
  std::vector<SentenceRef> out = picks;
  std::sort(out.begin(), out.end(), [&](const SentenceRef& a, const SentenceRef& b) {
    const int da = topic.document_index(a.doc_id), db = topic.document_index(b.doc_id);
    return da != db ? da < db : a.sent_idx < b.sent_idx;
  });
  return out;
}

// ---- rewards --------------------------------------------------------------------

RewardKind parse_reward_kind(std::string_view name) {
  if (name == "supert") return RewardKind::supert;
  if (name == "js") return RewardKind::js;
  throw ValidationError("unknown reward '" + std::string(name) + "' (expected supert or js)");
}

std::string to_string(RewardKind kind) { return kind == RewardKind::supert ? "supert" : "js"; }

struct RewardFunction::Impl {
  const Topic* topic;
  const EmbeddingStore* store;
  RewardSpec spec;
  std::vector<std::size_t> doc_offset;
  mutable std::unordered_map<std::string, double> cache;

  // supert
  std::unique_ptr<SupertScorer> scorer;
  bool fast_relaxed = false;
  Eigen::MatrixXd ref_min_cost;   // reference tokens x sentences: min cost over the sentence's tokens
  std::vector<double> weighted_min;  // per sentence: sum_t raw_w_t * min_i c(i, t)
  std::vector<double> weight_sum;    // per sentence: sum_t raw_w_t
  std::vector<long long> token_count;

  // js
  SourceStats stats;

  int flat(const SentenceRef& r) const {
    const int d = topic->document_index(r.doc_id);
    return static_cast<int>(doc_offset[static_cast<std::size_t>(d)]) + r.sent_idx;
  }

  void prepare_relaxed() {
    const TokenBag& ref = scorer->reference_bag();
    const IdfTable idf = build_idf(*topic);
    const auto norms = ref.vectors.colwise().norm().eval();
    if ((norms.array() == 0.0).any()) return;  // let the generic path raise
    const Eigen::MatrixXd unit_ref = (ref.vectors.array().rowwise() / norms.array()).matrix();
    const std::size_t n = doc_offset.back();
    ref_min_cost.setConstant(ref.size(), static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
    weighted_min.assign(n, 0.0);
    weight_sum.assign(n, 0.0);
    token_count.assign(n, 0);
    std::size_t i = 0;
    for (const auto& d : topic->documents) {
      for (const auto& s : d.sentences) {
        const auto& emb = store->at(topic->topic_id, d.doc_id, s.sent_idx);
        const auto kept = retained_tokens(s, store->include_stopwords());
        for (std::size_t c = 0; c < kept.size(); ++c) {
          if (spec.supert.filter_stopwords && kept[c]->is_stopword) continue;
          const Eigen::VectorXd v = emb.tokens.col(static_cast<Eigen::Index>(c));
          const double nv = v.norm();
          if (nv == 0.0) return;
          const Eigen::VectorXd cost = (1.0 - (unit_ref.transpose() * (v / nv)).array()).cwiseMax(0.0).cwiseMin(2.0);
          const double w = spec.supert.idf_weights ? idf.idf(kept[c]->stem) : 1.0;
          ref_min_cost.col(static_cast<Eigen::Index>(i)) = ref_min_cost.col(static_cast<Eigen::Index>(i)).cwiseMin(cost);
          weighted_min[i] += w * cost.minCoeff();
          weight_sum[i] += w;
          ++token_count[i];
        }
        ++i;
      }
    }
    fast_relaxed = true;
  }

  double supert(const std::vector<SentenceRef>& ordered) const {
    long long tokens = 0;
    std::vector<int> idx;
    for (const auto& r : ordered) {
      idx.push_back(flat(r));
      if (fast_relaxed) tokens += token_count[static_cast<std::size_t>(idx.back())];
    }
    const auto mode = spec.supert.mode;
    const bool relaxed = mode == WmdMode::relaxed ||
                         (mode == WmdMode::auto_select &&
                          static_cast<long long>(scorer->reference_bag().size()) * tokens > spec.supert.exact_cell_limit);
    if (!fast_relaxed || !relaxed) return scorer->score(selection_units(*topic, ordered));
    if (tokens == 0) return kWmdSentinel;
    double num = 0, den = 0;
    for (int s : idx) {
      num += weighted_min[static_cast<std::size_t>(s)];
      den += weight_sum[static_cast<std::size_t>(s)];
    }
    const double right = num / den;
    const auto& w = scorer->reference_bag().weights;
    double left = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int s : idx) best = std::min(best, ref_min_cost(i, s));
      left += w(i) * best;
    }
    return -std::max(left, right);
  }
};

RewardFunction::RewardFunction(const Topic& topic, const EmbeddingStore* store, const RewardSpec& spec)
    : impl_(std::make_unique<Impl>()) {
  impl_->topic = &topic;
  impl_->store = store;
  impl_->spec = spec;
  std::size_t off = 0;
  for (const auto& d : topic.documents) {
    impl_->doc_offset.push_back(off);
    off += d.sentences.size();
  }
  impl_->doc_offset.push_back(off);
  if (spec.kind == RewardKind::supert) {
    if (store == nullptr) throw ValidationError("the supert reward needs embeddings");
    const auto ref = build_pseudo_reference(topic, store, spec.strategy);
    impl_->scorer = std::make_unique<SupertScorer>(topic, *store, ref, spec.supert);
    if (spec.supert.mode != WmdMode::exact) impl_->prepare_relaxed();
  } else {
    impl_->stats = source_stats(topic);
  }
}

RewardFunction::~RewardFunction() = default;
RewardFunction::RewardFunction(RewardFunction&&) noexcept = default;
RewardFunction& RewardFunction::operator=(RewardFunction&&) noexcept = default;

const RewardSpec& RewardFunction::spec() const { return impl_->spec; }

double RewardFunction::operator()(const std::vector<SentenceRef>& selection) const {
  const auto ordered = in_document_order(selection, *impl_->topic);
  std::string key;
  for (const auto& r : ordered) {
    const int f = impl_->flat(r);
    key.append(reinterpret_cast<const char*>(&f), sizeof f);
  }
  if (auto it = impl_->cache.find(key); it != impl_->cache.end()) return it->second;
  double value;
  if (impl_->spec.kind == RewardKind::supert) {
    value = ordered.empty() ? kWmdSentinel : impl_->supert(ordered);
  } else {
    value = score_js(sentence_ptrs(selection_units(*impl_->topic, ordered)), impl_->stats);
  }
  impl_->cache.emplace(std::move(key), value);
  return value;
}

double terminal_reward(const ExtractState& state, const Topic& topic, const EmbeddingStore* store,
                       const RewardSpec& reward) {
  return RewardFunction(topic, store, reward)(state.selected);
}

// ---- features -------------------------------------------------------------------

FeatureMap::FeatureMap(const Topic& topic, const EmbeddingStore& store, int budget)
    : topic_(&topic), budget_(budget), embedding_dim_(store.dimension()) {
  if (budget < 1) throw ValidationError("word budget must be positive");
  for (const auto& d : topic.documents) {
    const double span = std::max<double>(1.0, static_cast<double>(d.sentences.size()) - 1.0);
    for (const auto& s : d.sentences) {
      refs_.push_back({d.doc_id, s.sent_idx});
      words_.push_back(s.word_count);
      rel_position_.push_back(s.sent_idx / span);
    }
  }
  const auto n = static_cast<Eigen::Index>(refs_.size());
  vectors_.resize(embedding_dim_, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = refs_[static_cast<std::size_t>(i)];
    vectors_.col(i) = store.at(topic.topic_id, r.doc_id, r.sent_idx).sentence;
  }
  gram_ = vectors_.transpose() * vectors_;
  const Eigen::VectorXd norms = gram_.diagonal().cwiseSqrt();
  cos_ = gram_.array() / (norms * norms.transpose()).array().max(1e-300);
  const Eigen::VectorXd centroid = n > 0 ? Eigen::VectorXd(vectors_.rowwise().mean()) : Eigen::VectorXd::Zero(embedding_dim_);
  centroid_dot_ = vectors_.transpose() * centroid;
  centroid_norm_ = centroid.norm();

  std::map<std::string, int, std::less<>> vocab;
  stems_.resize(refs_.size());
  std::size_t i = 0;
  for (const auto& d : topic.documents) {
    for (const auto& s : d.sentences) {
      std::map<int, double> counts;
      for (const auto& t : s.tokens) {
        if (t.is_stopword) continue;
        const int id = vocab.emplace(t.stem, static_cast<int>(vocab.size())).first->second;
        counts[id] += 1.0;
      }
      stems_[i++].assign(counts.begin(), counts.end());
    }
  }
  source_tf_.assign(vocab.size(), 0.0);
  for (const auto& st : stems_)
    for (const auto& [id, c] : st) source_tf_[static_cast<std::size_t>(id)] += c;
  double sn = 0;
  for (double v : source_tf_) sn += v * v;
  source_norm_ = std::sqrt(sn);
  for (const auto& st : stems_) {
    double dot = 0, sq = 0;
    for (const auto& [id, c] : st) {
      dot += c * source_tf_[static_cast<std::size_t>(id)];
      sq += c * c;
    }
    self_dot_source_.push_back(dot);
    self_norm2_.push_back(sq);
  }
}

int FeatureMap::index_of(const SentenceRef& ref) const {
  const auto it = std::find(refs_.begin(), refs_.end(), ref);
  if (it == refs_.end()) throw ValidationError("sentence " + ref.doc_id + "/" + std::to_string(ref.sent_idx) + " is not in the topic");
  return static_cast<int>(it - refs_.begin());
}

FeatureMap::Aggregate FeatureMap::empty() const {
  Aggregate a;
  a.vec_sum = Eigen::VectorXd::Zero(embedding_dim_);
  a.tf.assign(source_tf_.size(), 0.0);
  return a;
}

FeatureMap::Aggregate FeatureMap::add(const Aggregate& agg, int s) const {
  Aggregate a = agg;
  const auto su = static_cast<std::size_t>(s);
  double cross = 0, red = a.members.empty() ? 0.0 : a.redundancy;
  for (int j : a.members) {
    cross += gram_(j, s);
    red = std::max(red, cos_(j, s));
  }
  a.vec_norm2 += 2 * cross + gram_(s, s);
  a.vec_sum += vectors_.col(s);
  a.dot_centroid += centroid_dot_(s);
  a.position_sum += rel_position_[su];
  a.redundancy = red;
  double tf_cross = 0;
  for (const auto& [id, c] : stems_[su]) {
    tf_cross += a.tf[static_cast<std::size_t>(id)] * c;
    a.tf[static_cast<std::size_t>(id)] += c;
  }
  a.tf_norm2 += 2 * tf_cross + self_norm2_[su];
  a.tf_dot_source += self_dot_source_[su];
  a.words += words_[su];
  a.members.push_back(s);
  return a;
}

void FeatureMap::fill(double words, int count, const Eigen::VectorXd& sum, double norm2, double dot_c, double pos_sum,
                      double redundancy, double tf_norm2, double tf_dot_source, Eigen::Ref<Eigen::VectorXd> out) const {
  out(0) = 1.0;
  out(1) = words / budget_;
  out(2) = count / 10.0;
  out(3) = count > 0 && norm2 > 0 && centroid_norm_ > 0 ? dot_c / (std::sqrt(norm2) * centroid_norm_) : 0.0;
  out(4) = count > 0 ? pos_sum / count : 0.0;
  out(5) = redundancy;
  out(6) = tf_norm2 > 0 && source_norm_ > 0 ? tf_dot_source / (std::sqrt(tf_norm2) * source_norm_) : 0.0;
  if (count > 0) out.tail(embedding_dim_) = sum / count;
  else out.tail(embedding_dim_).setZero();
}

Eigen::VectorXd FeatureMap::features(const Aggregate& a) const {
  Eigen::VectorXd out(dimension());
  fill(a.words, static_cast<int>(a.members.size()), a.vec_sum, a.vec_norm2, a.dot_centroid, a.position_sum,
       a.redundancy, a.tf_norm2, a.tf_dot_source, out);
  return out;
}

void FeatureMap::afterstate_features(const Aggregate& a, int s, Eigen::Ref<Eigen::VectorXd> out) const {
  const auto su = static_cast<std::size_t>(s);
  double cross = 0, red = 0;
  for (int j : a.members) {
    cross += gram_(j, s);
    red = std::max(red, cos_(j, s));
  }
  if (!a.members.empty()) red = std::max(red, a.redundancy);
  double tf_cross = 0;
  for (const auto& [id, c] : stems_[su]) tf_cross += a.tf[static_cast<std::size_t>(id)] * c;
  fill(a.words + words_[su], static_cast<int>(a.members.size()) + 1, a.vec_sum + vectors_.col(s),
       a.vec_norm2 + 2 * cross + gram_(s, s), a.dot_centroid + centroid_dot_(s), a.position_sum + rel_position_[su],
       red, a.tf_norm2 + 2 * tf_cross + self_norm2_[su], a.tf_dot_source + self_dot_source_[su], out);
}

// ---- learning -------------------------------------------------------------------

namespace {

std::vector<int> fitting(const FeatureMap& fm, const FeatureMap::Aggregate& agg) {
  std::vector<int> out;
  const int room = fm.budget() - agg.words;
  std::vector<char> taken(fm.sentence_count(), 0);
  for (int m : agg.members) taken[static_cast<std::size_t>(m)] = 1;
  for (std::size_t i = 0; i < fm.sentence_count(); ++i)
    if (!taken[i] && fm.words(static_cast<int>(i)) <= room) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<SentenceRef> refs_of(const FeatureMap& fm, const std::vector<int>& members) {
  std::vector<SentenceRef> out;
  for (int m : members) out.push_back(fm.sentences()[static_cast<std::size_t>(m)]);
  return out;
}

}  // namespace

ValueFunction train(const FeatureMap& fm, const RewardFunction& reward, const TrainOptions& opt) {
  if (opt.episodes < 1) throw ValidationError("training needs at least one episode");
  if (fm.budget() != opt.budget) throw ValidationError("feature map and training options use different budgets");
  ValueFunction vf;
  vf.weights = Eigen::VectorXd::Zero(fm.dimension());
  vf.learning_rate = opt.learning_rate;
  Rng rng(opt.seed);
  Eigen::MatrixXd cand(fm.dimension(), static_cast<Eigen::Index>(fm.sentence_count()));
  Eigen::VectorXd phi(fm.dimension()), phi_next(fm.dimension());

  for (int e = 0; e < opt.episodes; ++e) {
    vf.epsilon = opt.episodes == 1
                     ? opt.epsilon_start
                     : opt.epsilon_start + (opt.epsilon_end - opt.epsilon_start) * e / (opt.episodes - 1);
    auto agg = fm.empty();
    phi = fm.features(agg);
    auto actions = fitting(fm, agg);
    while (!actions.empty()) {
      const auto na = static_cast<Eigen::Index>(actions.size());
      for (Eigen::Index k = 0; k < na; ++k) fm.afterstate_features(agg, actions[static_cast<std::size_t>(k)], cand.col(k));
      Eigen::Index choice = 0;
      if (rng.uniform() < vf.epsilon) {
        choice = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(na)));
      } else {
        const Eigen::VectorXd values = cand.leftCols(na).transpose() * vf.weights;
        for (Eigen::Index k = 1; k < na; ++k)
          if (values(k) > values(choice)) choice = k;
      }
      phi_next = cand.col(choice);
      agg = fm.add(agg, actions[static_cast<std::size_t>(choice)]);
      const double delta = vf.value(phi_next) - vf.value(phi);
      vf.weights += vf.learning_rate * delta * phi;
      phi = phi_next;
      actions = fitting(fm, agg);
    }
    const double r = reward(refs_of(fm, agg.members));
    const double delta = r - vf.value(phi);
    vf.weights += vf.learning_rate * delta * phi;
    if (!vf.weights.allFinite()) throw TrainingError("value function weights diverged", e);
  }
  vf.epsilon = opt.epsilon_end;
  return vf;
}

ExtractState rollout(const FeatureMap& fm, const ValueFunction& vf) {
  if (vf.weights.size() != fm.dimension()) throw ValidationError("value function does not match the feature map");
  ExtractState state = initial_state(fm.topic(), fm.budget());
  auto agg = fm.empty();
  Eigen::VectorXd phi(fm.dimension());
  for (auto actions = fitting(fm, agg); !actions.empty(); actions = fitting(fm, agg)) {
    int best = actions.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (int a : actions) {
      fm.afterstate_features(agg, a, phi);
      const double v = vf.value(phi);
      if (v > best_value) {
        best_value = v;
        best = a;
      }
    }
    agg = fm.add(agg, best);
    state = step(state, fm.sentences()[static_cast<std::size_t>(best)], fm.topic(), fm.budget());
  }
  return state;
}

ExtractState random_rollout(const Topic& topic, std::uint64_t seed, int budget) {
  Rng rng(seed);
  ExtractState state = initial_state(topic, budget);
  while (!state.terminal) {
    const auto actions = available_actions(state, topic, budget);
    state = step(state, actions[rng.below(actions.size())], topic, budget);
  }
  return state;
}

// ---- ROUGE ----------------------------------------------------------------------

namespace {

using Ngrams = std::map<std::vector<std::string>, int>;

Ngrams ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  Ngrams out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore make_score(double overlap, double ref_total, double cand_total) {
  RougeScore s;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.f1 = s.recall + s.precision > 0 ? 2 * s.recall * s.precision / (s.recall + s.precision) : 0.0;
  return s;
}

}  // namespace

RougeScore rouge(const std::vector<std::string>& candidate, const std::vector<std::vector<std::string>>& references,
                 RougeVariant variant) {
  const bool any = std::any_of(references.begin(), references.end(), [](const auto& r) { return !r.empty(); });
  if (!any) throw ValidationError("ROUGE needs at least one non-empty reference");
  if (candidate.empty()) return {};
  RougeScore total;
  int used = 0;
  for (const auto& ref : references) {
    if (ref.empty()) continue;
    RougeScore s;
    if (variant == RougeVariant::rl) {
      s = make_score(static_cast<double>(lcs_length(candidate, ref)), static_cast<double>(ref.size()),
                     static_cast<double>(candidate.size()));
    } else {
      const std::size_t n = variant == RougeVariant::r1 ? 1 : 2;
      const auto cg = ngrams(candidate, n);
      const auto rg = ngrams(ref, n);
      double overlap = 0, ref_total = 0, cand_total = 0;
      for (const auto& [g, c] : rg) {
        ref_total += c;
        if (auto it = cg.find(g); it != cg.end()) overlap += std::min(c, it->second);
      }
      for (const auto& [g, c] : cg) cand_total += c;
      s = make_score(overlap, ref_total, cand_total);
    }
    total.recall += s.recall;
    total.precision += s.precision;
    total.f1 += s.f1;
    ++used;
  }
  total.recall /= used;
  total.precision /= used;
  total.f1 /= used;
  return total;
}

std::vector<std::string> rouge_tokens(const std::vector<const SentenceRecord*>& sentences,
                                      const RougeTokenOptions& options) {
  std::vector<std::string> out;
  for (const auto* s : sentences)
    for (const auto& t : s->tokens)
      if (!(options.remove_stopwords && t.is_stopword)) out.push_back(options.stem ? t.stem : t.surface);
  return out;
}

std::vector<std::string> rouge_tokens(std::string_view text, const RougeTokenOptions& options) {
  const auto sentences = analyze_text(text);
  std::vector<const SentenceRecord*> ptrs;
  for (const auto& s : sentences) ptrs.push_back(&s);
  return rouge_tokens(ptrs, options);
}

}  // namespace pseval
