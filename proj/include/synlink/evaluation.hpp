#pragma once

// accuracy@n and k-fold cross-validation with per-word-class breakdown.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "synlink/candidate_ranking.hpp"
#include "synlink/error.hpp"
#include "synlink/lexicon.hpp"
#include "synlink/pipeline.hpp"
#include "synlink/synset_embedding.hpp"

namespace synlink {

using GoldIndex = std::map<std::string, std::set<std::string>, std::less<>>;

inline GoldIndex index_gold(const std::vector<LinkRecord>& gold) {
  GoldIndex out;
  for (const auto& g : gold) out[g.source_id].insert(g.target_id);
  return out;
}

// 1-based rank of the first gold target in the list, 0 when none appears.
inline std::size_t first_gold_rank(const RankedCandidateList& list,
                                   const std::set<std::string>& gold_targets) {
  for (std::size_t r = 0; r < list.candidates.size(); ++r) {
    if (gold_targets.contains(list.candidates[r].target_id)) return r + 1;
  }
  return 0;
}

// Fraction of lists with any gold target in ranks 1..n. A skipped source is
// represented by a list with no candidates and counts as a miss.
inline double accuracy_at_n(const std::vector<RankedCandidateList>& ranked_lists,
                            const std::vector<LinkRecord>& gold, std::size_t n) {
  if (ranked_lists.empty()) throw InvalidArgument("empty evaluation set");
  if (n == 0) throw InvalidArgument("n must be at least 1");
  const auto index = index_gold(gold);
  std::size_t hits = 0;
  for (const auto& list : ranked_lists) {
    const auto it = index.find(list.source_id);
    if (it == index.end()) {
      throw InvalidArgument("source '" + list.source_id + "' has no gold link");
    }
    const auto rank = first_gold_rank(list, it->second);
    if (rank != 0 && rank <= n) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranked_lists.size());
}

struct EvaluationConfig {
  MapConfig map;
  Similarity similarity = Similarity::cosine;
  std::vector<std::size_t> n_values{1, 3, 5, 8, 10};
  std::size_t k = 3;
  std::uint64_t seed = 0;
};

struct FoldAudit {
  std::vector<std::string> held_out_sources;
  std::vector<std::string> training_sources;  // sources of the pairs W was fitted on
  std::size_t training_pairs = 0;
};

struct EvaluationReport {
  std::map<Pos, std::map<std::size_t, double>> per_class;
  std::map<std::size_t, double> overall;
  std::vector<std::size_t> n_values;
  std::size_t fold_count = 0;
  std::map<Pos, std::size_t> pair_counts;
  std::uint64_t seed = 0;
  std::map<Pos, std::string> absent;  // class -> reason it is not reported
  std::size_t rejected_links = 0;     // source id not in the lexicon
  std::vector<FoldAudit> folds;
};

struct FoldAssignment {
  std::vector<std::vector<LinkRecord>> folds;
  std::vector<LinkRecord> rejects;
};

// Folds over distinct source ids, so every link of one source lands in the
// same fold. Sources are shuffled per class and dealt round-robin, which
// keeps folds near-equal and stratified by word class.
inline FoldAssignment make_folds(const std::vector<LinkRecord>& links,
                                 const Lexicon& source_lexicon, std::size_t k,
                                 std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k must be at least 2");
  if (links.size() < k) {
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds the number of links (" +
                          std::to_string(links.size()) + ")");
  }
  const auto partition = partition_by_pos(links, source_lexicon);
  std::mt19937_64 rng(seed);
  std::map<std::string, std::size_t, std::less<>> fold_of;
  std::size_t cursor = 0;
  for (const auto pos : kAllPos) {
    const auto it = partition.buckets.find(pos);
    if (it == partition.buckets.end()) continue;
    std::set<std::string> distinct;
    for (const auto& l : it->second) distinct.insert(l.source_id);
    std::vector<std::string> sources(distinct.begin(), distinct.end());
    std::shuffle(sources.begin(), sources.end(), rng);
    for (auto& s : sources) fold_of.emplace(std::move(s), cursor++ % k);
  }
  if (fold_of.size() < k) {
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds the number of distinct sources (" +
                          std::to_string(fold_of.size()) + ")");
  }
  FoldAssignment out;
  out.folds.resize(k);
  out.rejects = partition.rejects;
  for (const auto& l : links) {
    const auto it = fold_of.find(l.source_id);
    if (it != fold_of.end()) out.folds[it->second].push_back(l);
  }
  return out;
}

struct EvaluationInputs {
  const Lexicon& source_lexicon;
  const SynsetEmbeddingSet& source;
  const SynsetEmbeddingSet& target;  // full candidate pool
};

inline EvaluationReport kfold_cross_validate(const std::vector<LinkRecord>& links,
                                             const EvaluationInputs& inputs,
                                             const EvaluationConfig& config) {
  if (config.n_values.empty()) throw InvalidArgument("n_values must not be empty");
  std::vector<std::size_t> n_values = config.n_values;
  std::sort(n_values.begin(), n_values.end());
  n_values.erase(std::unique(n_values.begin(), n_values.end()), n_values.end());
  if (n_values.front() == 0) throw InvalidArgument("n values must be positive");
  const std::size_t n_max = n_values.back();

  const auto assignment = make_folds(links, inputs.source_lexicon, config.k, config.seed);
  const CandidateIndex pool(inputs.target);

  EvaluationReport report;
  report.n_values = n_values;
  report.fold_count = config.k;
  report.seed = config.seed;
  report.rejected_links = assignment.rejects.size();

  std::map<Pos, std::set<std::string>> class_sources;
  for (const auto& fold : assignment.folds) {
    for (const auto& l : fold) {
      const Pos pos = inputs.source_lexicon.find(l.source_id)->pos;
      ++report.pair_counts[pos];
      class_sources[pos].insert(l.source_id);
    }
  }
  for (const auto pos : kAllPos) {
    const auto count = report.pair_counts.contains(pos) ? report.pair_counts[pos] : 0;
    if (count == 0) {
      report.absent[pos] = "no links";
    } else if (count < config.k || class_sources[pos].size() < config.k) {
      report.absent[pos] = "fewer than k=" + std::to_string(config.k) + " links";
    }
  }

  // Per fold: hits[pos][n] and counts[pos]; overall keyed separately.
  std::map<Pos, std::map<std::size_t, double>> class_sum;
  std::map<std::size_t, double> overall_sum;

  for (std::size_t f = 0; f < config.k; ++f) {
    std::vector<LinkRecord> train;
    for (std::size_t g = 0; g < config.k; ++g) {
      if (g != f) train.insert(train.end(), assignment.folds[g].begin(), assignment.folds[g].end());
    }
    const auto built = make_training_pairs(train, inputs.source, inputs.target);
    const auto maps = fit_maps(built.pairs, inputs.source_lexicon, config.map);

    FoldAudit audit;
    audit.training_pairs = built.pairs.size();
    {
      std::set<std::string> ids;
      for (const auto& p : built.pairs) ids.insert(p.source_id);
      audit.training_sources.assign(ids.begin(), ids.end());
    }

    const auto gold = index_gold(assignment.folds[f]);
    std::map<Pos, std::map<std::size_t, std::size_t>> hits;
    std::map<Pos, std::size_t> counts;
    std::map<std::size_t, std::size_t> overall_hits;
    std::size_t overall_count = 0;
    for (const auto& [source_id, targets] : gold) {
      audit.held_out_sources.push_back(source_id);
      const Pos pos = inputs.source_lexicon.find(source_id)->pos;
      ++counts[pos];
      ++overall_count;
      const auto* e = inputs.source.find(source_id);
      if (e == nullptr) continue;
      const auto list =
          pool.rank(apply_map(maps.for_pos(pos), e->vector), n_max, config.similarity, source_id);
      const auto rank = first_gold_rank(list, targets);
      if (rank == 0) continue;
      for (const auto n : n_values) {
        if (rank <= n) {
          ++hits[pos][n];
          ++overall_hits[n];
        }
      }
    }
    for (const auto n : n_values) {
      overall_sum[n] += static_cast<double>(overall_hits[n]) / static_cast<double>(overall_count);
      for (const auto& [pos, count] : counts) {
        class_sum[pos][n] += static_cast<double>(hits[pos][n]) / static_cast<double>(count);
      }
    }
    report.folds.push_back(std::move(audit));
  }

  const double folds = static_cast<double>(config.k);
  for (const auto n : n_values) report.overall[n] = overall_sum[n] / folds;
  for (const auto pos : kAllPos) {
    if (report.absent.contains(pos)) continue;
    for (const auto n : n_values) report.per_class[pos][n] = class_sum[pos][n] / folds;
  }
  return report;
}

enum class ReportFormat { tsv, markdown };

// One row per word class and an Overall row, one column per n. Accuracies
// have two decimals; classes without a value show an em dash.
inline std::string render_report(const EvaluationReport& report, ReportFormat format) {
  const bool md = format == ReportFormat::markdown;
  const std::string_view absent_cell = "\xE2\x80\x94";
  std::string out;
  auto cell = [&](std::string_view text, bool first) {
    if (md) {
      out += first ? "| " : " | ";
    } else if (!first) {
      out += '\t';
    }
    out += text;
  };
  auto end_row = [&] { out += md ? " |\n" : "\n"; };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  cell(md ? "Word Class" : "class", true);
  for (const auto n : report.n_values) cell((md ? "Acc@" : "acc@") + std::to_string(n), false);
  end_row();
  if (md) {
    out += "|---|";
    for (std::size_t i = 0; i < report.n_values.size(); ++i) out += "---|";
    out += '\n';
  }
  for (const auto pos : kAllPos) {
    cell(pos_name(pos), true);
    const auto it = report.per_class.find(pos);
    for (const auto n : report.n_values) {
      if (it == report.per_class.end() || !it->second.contains(n)) {
        cell(absent_cell, false);
      } else {
        cell(fmt(it->second.at(n)), false);
      }
    }
    end_row();
  }
  cell("Overall", true);
  for (const auto n : report.n_values) {
    const auto it = report.overall.find(n);
    cell(it == report.overall.end() ? std::string(absent_cell) : fmt(it->second), false);
  }
  end_row();
  return out;
}

}  // namespace synlink
