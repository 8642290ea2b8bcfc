#pragma once

// Synset vectors as the mean of member word vectors.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "synlink/embedding_io.hpp"
#include "synlink/error.hpp"
#include "synlink/lexicon.hpp"

namespace synlink {

enum class OovHandling { skip_member, fail_synset };
enum class PhraseHandling { split_and_average, skip_member };

struct EmbeddingPolicy {
  OovHandling oov_handling = OovHandling::skip_member;
  PhraseHandling phrase_handling = PhraseHandling::split_and_average;
  CasePolicy case_policy = CasePolicy::exact;
  double min_coverage_fraction = 0.0;

  void validate() const {
    if (!(min_coverage_fraction >= 0.0 && min_coverage_fraction <= 1.0)) {
      throw InvalidArgument("min_coverage_fraction must lie in [0,1]");
    }
  }
};

struct SynsetEmbedding {
  std::string synset_id;
  Eigen::VectorXd vector;
  std::size_t covered_members = 0;
  std::size_t total_members = 0;
};

struct Skipped {
  std::string reason;
};

using EmbedOutcome = std::variant<SynsetEmbedding, Skipped>;

// A member is a phrase when it contains a space or an underscore.
inline bool is_phrase(std::string_view member) {
  return member.find_first_of(" _") != std::string_view::npos;
}

inline std::vector<std::string_view> phrase_words(std::string_view member) {
  std::vector<std::string_view> words;
  std::size_t start = 0;
  while (start < member.size()) {
    const auto end = member.find_first_of(" _", start);
    const auto word = member.substr(start, end - start);
    if (!word.empty()) words.push_back(word);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return words;
}

namespace detail {

inline void accumulate(Eigen::VectorXd& acc, std::span<const float> v, double weight) {
  for (std::size_t i = 0; i < v.size(); ++i) acc[static_cast<Eigen::Index>(i)] += weight * v[i];
}

// Contribution of one member, or nullopt when it has no usable vector. The
// whole member is tried first so vocabularies holding phrase tokens
// ("New_York") are used as-is.
inline std::optional<Eigen::VectorXd> member_vector(std::string_view member,
                                                    const WordEmbeddingTable& table,
                                                    const EmbeddingPolicy& policy) {
  const auto dim = static_cast<Eigen::Index>(table.dimension());
  if (auto v = table.lookup(member, policy.case_policy)) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    accumulate(out, *v, 1.0);
    return out;
  }
  if (!is_phrase(member) || policy.phrase_handling == PhraseHandling::skip_member) {
    return std::nullopt;
  }
  std::vector<std::span<const float>> parts;
  for (const auto word : phrase_words(member)) {
    if (auto v = table.lookup(word, policy.case_policy)) parts.push_back(*v);
  }
  if (parts.empty()) return std::nullopt;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  for (const auto& p : parts) accumulate(out, p, 1.0);
  out /= static_cast<double>(parts.size());
  return out;
}

}  // namespace detail

inline EmbedOutcome embed_synset(const Synset& synset, const WordEmbeddingTable& table,
                                 const EmbeddingPolicy& policy = {}) {
  if (synset.members.empty()) throw InvalidArgument("synset '" + synset.id + "' has no members");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.dimension()));
  std::size_t covered = 0;
  for (const auto& member : synset.members) {
    auto v = detail::member_vector(member, table, policy);
    if (!v) {
      if (policy.oov_handling == OovHandling::fail_synset) {
        return Skipped{"out-of-vocabulary member '" + member + "'"};
      }
      continue;
    }
    sum += *v;
    ++covered;
  }
  const std::size_t total = synset.members.size();
  if (covered == 0) return Skipped{"zero coverage"};
  if (static_cast<double>(covered) < policy.min_coverage_fraction * static_cast<double>(total)) {
    return Skipped{"coverage " + std::to_string(covered) + "/" + std::to_string(total) +
                   " below minimum"};
  }
  sum /= static_cast<double>(covered);
  return SynsetEmbedding{synset.id, std::move(sum), covered, total};
}

// Embeddings of one language, keyed by synset id, all of one dimension.
class SynsetEmbeddingSet {
 public:
  SynsetEmbeddingSet(std::string language_tag, std::size_t dimension)
      : language_tag_(std::move(language_tag)), dimension_(dimension) {}

  void insert(SynsetEmbedding e) {
    if (static_cast<std::size_t>(e.vector.size()) != dimension_) {
      throw DimensionMismatch("synset '" + e.synset_id + "' has dimension " +
                              std::to_string(e.vector.size()) + ", set is fixed at " +
                              std::to_string(dimension_));
    }
    auto id = e.synset_id;
    entries_.insert_or_assign(std::move(id), std::move(e));
  }

  const SynsetEmbedding* find(std::string_view id) const {
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  const std::string& language_tag() const { return language_tag_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::string language_tag_;
  std::size_t dimension_;
  std::map<std::string, SynsetEmbedding, std::less<>> entries_;
};

struct SkipEntry {
  std::string synset_id;
  std::string reason;
};

struct EmbeddedLexicon {
  SynsetEmbeddingSet embeddings;
  std::vector<SkipEntry> skips;  // in synset id order
};

inline EmbeddedLexicon embed_lexicon(const Lexicon& lexicon, const WordEmbeddingTable& table,
                                     const EmbeddingPolicy& policy = {}) {
  policy.validate();
  if (lexicon.language_tag() != table.language_tag()) {
    throw InvalidArgument("lexicon language '" + lexicon.language_tag() +
                          "' does not match embedding table language '" + table.language_tag() +
                          "'");
  }
  EmbeddedLexicon out{SynsetEmbeddingSet(lexicon.language_tag(), table.dimension()), {}};
  for (const auto& [id, synset] : lexicon) {
    auto outcome = embed_synset(synset, table, policy);
    if (auto* e = std::get_if<SynsetEmbedding>(&outcome)) {
      out.embeddings.insert(std::move(*e));
    } else {
      out.skips.push_back({id, std::get<Skipped>(outcome).reason});
    }
  }
  return out;
}

// word2vec text export with synset ids in the word column.
inline void write_synset_embeddings(std::ostream& out, const SynsetEmbeddingSet& set) {
  std::vector<std::pair<std::string_view, const Eigen::VectorXd&>> rows;
  rows.reserve(set.size());
  for (const auto& [id, e] : set) rows.emplace_back(id, e.vector);
  write_word2vec_rows(out, set.dimension(), rows);
}

inline void write_synset_embeddings(const std::filesystem::path& path,
                                    const SynsetEmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_synset_embeddings(out, set);
}

inline void write_skip_report(std::ostream& out, const std::vector<SkipEntry>& skips) {
  for (const auto& s : skips) out << s.synset_id << '\t' << s.reason << '\n';
}

}  // namespace synlink
