#pragma once

// Glue shared by the evaluation harness, the CLI and the link service:
// turning gold links into training pairs and fitting one global map or one
// map per word class.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "synlink/embedding_io.hpp"
#include "synlink/lexicon.hpp"
#include "synlink/linear_map.hpp"
#include "synlink/synset_embedding.hpp"

namespace synlink {

struct MapConfig {
  Solver solver = Solver::closed_form;
  double ridge_lambda = 1e-3;
  GradientDescentOptions gd;
  bool per_pos = false;
};

struct PairBuild {
  std::vector<TrainingPair> pairs;
  std::size_t missing_source = 0;  // source synset has no embedding
  std::size_t missing_target = 0;
};

// Links whose endpoints both have embeddings become pairs, in link order.
inline PairBuild make_training_pairs(const std::vector<LinkRecord>& links,
                                     const SynsetEmbeddingSet& source,
                                     const SynsetEmbeddingSet& target) {
  PairBuild out;
  out.pairs.reserve(links.size());
  for (const auto& link : links) {
    const auto* s = source.find(link.source_id);
    const auto* t = target.find(link.target_id);
    if (s == nullptr) ++out.missing_source;
    if (t == nullptr) ++out.missing_target;
    if (s == nullptr || t == nullptr) continue;
    out.pairs.push_back({link.source_id, link.target_id, s->vector, t->vector});
  }
  return out;
}

inline TranslationMatrix fit_map(const std::vector<TrainingPair>& pairs, const MapConfig& config) {
  if (config.solver == Solver::closed_form) return fit_least_squares(pairs, config.ridge_lambda);
  auto gd = config.gd;
  gd.ridge_lambda = config.ridge_lambda;
  return fit_gradient_descent(pairs, gd);
}

// A global map plus, in per-POS mode, one map per word class with training
// pairs. Classes without their own map use the global one.
class MapSet {
 public:
  MapSet() = default;
  explicit MapSet(TranslationMatrix global) : global_(std::move(global)) {}

  void set_class_map(Pos pos, TranslationMatrix w) { per_pos_.insert_or_assign(pos, std::move(w)); }

  const TranslationMatrix& for_pos(Pos pos) const {
    const auto it = per_pos_.find(pos);
    return it == per_pos_.end() ? global_ : it->second;
  }
  const TranslationMatrix& global() const { return global_; }
  const std::map<Pos, TranslationMatrix>& per_pos() const { return per_pos_; }

 private:
  TranslationMatrix global_;
  std::map<Pos, TranslationMatrix> per_pos_;
};

inline MapSet fit_maps(const std::vector<TrainingPair>& pairs, const Lexicon& source_lexicon,
                       const MapConfig& config) {
  MapSet maps(fit_map(pairs, config));
  if (!config.per_pos) return maps;
  std::map<Pos, std::vector<TrainingPair>> by_pos;
  for (const auto& p : pairs) {
    if (const auto* s = source_lexicon.find(p.source_id)) by_pos[s->pos].push_back(p);
  }
  for (auto& [pos, class_pairs] : by_pos) {
    try {
      maps.set_class_map(pos, fit_map(class_pairs, config));
    } catch (const SingularSystemError& e) {
      spdlog::warn("{} map not fitted ({}); using the global map", pos_name(pos), e.what());
    }
  }
  return maps;
}

inline SynsetEmbeddingSet normalized(const SynsetEmbeddingSet& set) {
  SynsetEmbeddingSet out(set.language_tag(), set.dimension());
  for (const auto& [id, e] : set) {
    auto copy = e;
    copy.vector = l2_normalize(e.vector).vector;
    out.insert(std::move(copy));
  }
  return out;
}

}  // namespace synlink
