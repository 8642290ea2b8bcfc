#pragma once

// Exhaustive nearest-neighbour ranking of target synsets for a mapped vector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "synlink/error.hpp"
#include "synlink/lexicon.hpp"
#include "synlink/linear_map.hpp"
#include "synlink/synset_embedding.hpp"

namespace synlink {

enum class Similarity { dot, cosine };

inline std::string_view similarity_name(Similarity s) {
  return s == Similarity::dot ? "dot" : "cosine";
}

struct Candidate {
  std::string target_id;
  double score = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Candidates by descending score, ties by ascending target id.
struct RankedCandidateList {
  std::string source_id;
  std::vector<Candidate> candidates;
  Similarity similarity = Similarity::cosine;
};

using LinkOutcome = std::variant<RankedCandidateList, Skipped>;

// Precomputed target vectors and norms so many queries share one scan setup.
// Immutable after construction; safe to query from several threads.
class CandidateIndex {
 public:
  explicit CandidateIndex(const SynsetEmbeddingSet& targets)
      : dimension_(targets.dimension()) {
    ids_.reserve(targets.size());
    vectors_.reserve(targets.size());
    norms_.reserve(targets.size());
    for (const auto& [id, e] : targets) {
      ids_.push_back(id);
      vectors_.push_back(e.vector);
      norms_.push_back(std::sqrt(dot(e.vector, e.vector)));
    }
  }

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dimension() const { return dimension_; }

  // Sequential sum in index order; zero-norm vectors score 0 under cosine.
  static double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }

  RankedCandidateList rank(const Eigen::VectorXd& query, std::size_t n, Similarity kind,
                           std::string source_id = {}) const {
    if (empty()) throw InvalidArgument("empty target set");
    if (n == 0) throw InvalidArgument("n must be at least 1");
    if (static_cast<std::size_t>(query.size()) != dimension_) {
      throw DimensionMismatch("query has dimension " + std::to_string(query.size()) +
                              ", targets have " + std::to_string(dimension_));
    }
    const double query_norm = std::sqrt(dot(query, query));
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      double s = dot(query, vectors_[i]);
      if (kind == Similarity::cosine) {
        const double denom = query_norm * norms_[i];
        s = denom > 0.0 ? s / denom : 0.0;
      }
      scored.emplace_back(s, i);
    }
    // ids_ is sorted, so a smaller index means a smaller id.
    const auto better = [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    };
    const std::size_t take = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), better);
    RankedCandidateList out{std::move(source_id), {}, kind};
    out.candidates.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
      out.candidates.push_back({ids_[scored[r].second], scored[r].first});
    }
    return out;
  }

 private:
  std::size_t dimension_;
  std::vector<std::string> ids_;
  std::vector<Eigen::VectorXd> vectors_;
  std::vector<double> norms_;
};

inline RankedCandidateList rank_candidates(const Eigen::VectorXd& v_prime,
                                           const SynsetEmbeddingSet& targets, std::size_t n,
                                           Similarity kind = Similarity::cosine) {
  return CandidateIndex(targets).rank(v_prime, n, kind);
}

// embed -> map -> rank for one source synset.
inline LinkOutcome link_synset(const Synset& source, const TranslationMatrix& w,
                               const WordEmbeddingTable& source_table,
                               const CandidateIndex& targets, const EmbeddingPolicy& policy,
                               std::size_t n, Similarity kind = Similarity::cosine) {
  auto embedded = embed_synset(source, source_table, policy);
  if (auto* skipped = std::get_if<Skipped>(&embedded)) return *skipped;
  const auto& e = std::get<SynsetEmbedding>(embedded);
  return targets.rank(apply_map(w, e.vector), n, kind, source.id);
}

inline LinkOutcome link_synset(const Synset& source, const TranslationMatrix& w,
                               const WordEmbeddingTable& source_table,
                               const SynsetEmbeddingSet& targets, const EmbeddingPolicy& policy,
                               std::size_t n, Similarity kind = Similarity::cosine) {
  return link_synset(source, w, source_table, CandidateIndex(targets), policy, n, kind);
}

// source_id<TAB>rank<TAB>target_id<TAB>score, ranks from 1.
inline void write_candidates_tsv(std::ostream& out, const RankedCandidateList& list) {
  std::string buf;
  for (std::size_t r = 0; r < list.candidates.size(); ++r) {
    const auto& c = list.candidates[r];
    buf.assign(list.source_id);
    buf.push_back('\t');
    detail::append_number(buf, r + 1);
    buf.push_back('\t');
    buf.append(c.target_id);
    buf.push_back('\t');
    detail::append_number(buf, c.score);
    buf.push_back('\n');
    out << buf;
  }
}

}  // namespace synlink
