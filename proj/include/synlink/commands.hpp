#pragma once

// The embed / train / link / eval runs behind the `synlink` executable.
// Each command reads inputs named in a RunConfig, writes its data files into
// the output directory, and reports diagnostics through spdlog (stderr).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "synlink/candidate_ranking.hpp"
#include "synlink/embedding_io.hpp"
#include "synlink/error.hpp"
#include "synlink/evaluation.hpp"
#include "synlink/lexicon.hpp"
#include "synlink/linear_map.hpp"
#include "synlink/pipeline.hpp"
#include "synlink/synset_embedding.hpp"

namespace synlink {

struct RunConfig {
  std::filesystem::path source_embeddings;
  std::filesystem::path target_embeddings;
  std::filesystem::path source_synsets;
  std::filesystem::path target_synsets;
  std::filesystem::path links;
  std::filesystem::path output_dir = ".";
  std::string source_language = "src";
  std::string target_language = "tgt";
  bool reverse_links = false;  // link file lists target_id first

  MapConfig map;
  bool normalize = false;  // unit-normalize synset vectors before fitting and ranking
  Similarity similarity = Similarity::cosine;
  std::vector<std::size_t> n_values{1, 3, 5, 8, 10};
  std::size_t k = 3;
  std::optional<std::uint64_t> seed;
  EmbeddingPolicy policy;
};

namespace detail {

inline void require_file(const std::filesystem::path& path, std::string_view what) {
  if (path.empty()) throw InvalidArgument(std::string(what) + " path is required");
  if (!std::filesystem::exists(path)) {
    throw InvalidArgument(std::string(what) + " not found: " + path.string());
  }
}

inline std::uint64_t require_seed(const RunConfig& config) {
  if (!config.seed) throw InvalidArgument("--seed is required");
  return *config.seed;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

}  // namespace detail

// One side (source or target) loaded and embedded.
struct LanguageSide {
  WordEmbeddingTable table;
  Lexicon lexicon;
  EmbeddedLexicon embedded;
};

inline LanguageSide load_side(const std::filesystem::path& embeddings,
                              const std::filesystem::path& synsets, const std::string& language,
                              const RunConfig& config) {
  detail::require_file(embeddings, language + " embeddings");
  detail::require_file(synsets, language + " synsets");
  auto table = load_word2vec_text(embeddings, language, config.policy.case_policy);
  auto lexicon = load_synsets(synsets, language);
  auto embedded = embed_lexicon(lexicon, table, config.policy);
  if (config.normalize) embedded.embeddings = normalized(embedded.embeddings);
  spdlog::info("{}: {} words, {} synsets, {} embedded, {} skipped", language, table.size(),
               lexicon.size(), embedded.embeddings.size(), embedded.skips.size());
  return {std::move(table), std::move(lexicon), std::move(embedded)};
}

inline LanguageSide load_source(const RunConfig& config) {
  return load_side(config.source_embeddings, config.source_synsets, config.source_language, config);
}

inline LanguageSide load_target(const RunConfig& config) {
  return load_side(config.target_embeddings, config.target_synsets, config.target_language, config);
}

inline std::vector<LinkRecord> load_direct_links(const RunConfig& config) {
  detail::require_file(config.links, "links");
  auto links = filter_direct(load_links(config.links));
  if (config.reverse_links) {
    for (auto& l : links) std::swap(l.source_id, l.target_id);
  }
  return links;
}

struct EmbedResult {
  std::vector<std::filesystem::path> written;
  std::size_t skipped = 0;
};

// Writes <lang>.synsets.vec and <lang>.skips.tsv for the source side, and for
// the target side when its inputs are configured.
inline EmbedResult cmd_embed(const RunConfig& config) {
  EmbedResult result;
  auto export_side = [&](const LanguageSide& side, const std::string& language) {
    const auto vec_path = config.output_dir / (language + ".synsets.vec");
    const auto skip_path = config.output_dir / (language + ".skips.tsv");
    auto vec_out = detail::open_output(vec_path);
    write_synset_embeddings(vec_out, side.embedded.embeddings);
    auto skip_out = detail::open_output(skip_path);
    write_skip_report(skip_out, side.embedded.skips);
    result.written.push_back(vec_path);
    result.written.push_back(skip_path);
    result.skipped += side.embedded.skips.size();
  };
  export_side(load_source(config), config.source_language);
  if (!config.target_embeddings.empty() || !config.target_synsets.empty()) {
    export_side(load_target(config), config.target_language);
  }
  return result;
}

struct TrainResult {
  TranslationMatrix matrix;
  std::filesystem::path matrix_path;
  std::size_t missing_source = 0;
  std::size_t missing_target = 0;
};

// Fits W on all DIRECT links and writes matrix.txt plus train_summary.tsv.
inline TrainResult cmd_train(const RunConfig& config) {
  const auto seed = detail::require_seed(config);
  const auto source = load_source(config);
  const auto target = load_target(config);
  const auto links = load_direct_links(config);
  const auto built = make_training_pairs(links, source.embedded.embeddings, target.embedded.embeddings);
  if (built.pairs.empty()) throw InvalidArgument("no link has embeddings on both sides");

  auto map_config = config.map;
  map_config.gd.seed = seed;
  auto w = fit_map(built.pairs, map_config);

  TrainResult result{w, config.output_dir / "matrix.txt", built.missing_source, built.missing_target};
  {
    auto out = detail::open_output(result.matrix_path);
    write_matrix(out, w);
  }
  {
    auto out = detail::open_output(config.output_dir / "train_summary.tsv");
    std::string buf = "solver\t" + std::string(solver_name(w.info().solver)) + "\n";
    buf += "pairs\t" + std::to_string(w.info().pair_count) + "\n";
    buf += "missing_source\t" + std::to_string(built.missing_source) + "\n";
    buf += "missing_target\t" + std::to_string(built.missing_target) + "\n";
    buf += "lambda\t";
    detail::append_number(buf, w.info().ridge_lambda);
    buf += "\nresidual\t";
    detail::append_number(buf, w.info().residual);
    buf += "\nmean_residual\t";
    detail::append_number(buf, w.info().residual / static_cast<double>(w.info().pair_count));
    buf += "\nversion\t" + matrix_version(w) + "\n";
    out << buf;
  }
  spdlog::info("fitted {}x{} map on {} pairs, residual {}", w.target_dimension(),
               w.source_dimension(), w.info().pair_count, w.info().residual);
  return result;
}

struct LinkRunResult {
  std::filesystem::path candidates_path;
  std::size_t linked = 0;
  std::size_t skipped = 0;
};

// Ranks every source synset against the full target pool and writes
// candidates.tsv (source_id, rank, target_id, score) and link_skips.tsv.
inline LinkRunResult cmd_link(const RunConfig& config, const std::filesystem::path& matrix_path,
                              std::size_t n) {
  if (n == 0) throw InvalidArgument("n must be at least 1");
  detail::require_file(matrix_path, "matrix");
  const auto w = load_matrix(matrix_path);
  const auto source = load_source(config);
  const auto target = load_target(config);
  if (target.embedded.embeddings.empty()) throw InvalidArgument("empty target set");
  const CandidateIndex pool(target.embedded.embeddings);

  LinkRunResult result{config.output_dir / "candidates.tsv", 0, 0};
  auto out = detail::open_output(result.candidates_path);
  auto skips = detail::open_output(config.output_dir / "link_skips.tsv");
  for (const auto& [id, synset] : source.lexicon) {
    const auto* e = source.embedded.embeddings.find(id);
    if (e == nullptr) {
      ++result.skipped;
      skips << id << "\tzero coverage\n";
      continue;
    }
    write_candidates_tsv(out, pool.rank(apply_map(w, e->vector), n, config.similarity, id));
    ++result.linked;
  }
  return result;
}

struct EvalResult {
  EvaluationReport report;
  std::filesystem::path tsv_path;
  std::filesystem::path markdown_path;
};

inline EvalResult cmd_eval(const RunConfig& config) {
  const auto seed = detail::require_seed(config);
  const auto source = load_source(config);
  const auto target = load_target(config);
  const auto links = load_direct_links(config);

  EvaluationConfig eval;
  eval.map = config.map;
  eval.map.gd.seed = seed;
  eval.similarity = config.similarity;
  eval.n_values = config.n_values;
  eval.k = config.k;
  eval.seed = seed;
  auto report = kfold_cross_validate(
      links, {source.lexicon, source.embedded.embeddings, target.embedded.embeddings}, eval);
  for (const auto& [pos, why] : report.absent) {
    spdlog::info("{} not reported: {}", pos_name(pos), why);
  }
  if (report.rejected_links > 0) {
    spdlog::warn("{} links reference unknown source synsets", report.rejected_links);
  }

  EvalResult result{std::move(report), config.output_dir / "report.tsv",
                    config.output_dir / "report.md"};
  detail::open_output(result.tsv_path) << render_report(result.report, ReportFormat::tsv);
  detail::open_output(result.markdown_path) << render_report(result.report, ReportFormat::markdown);
  return result;
}

}  // namespace synlink
