#pragma once

// Synthetic bilingual wordnets with a known linear relation, used by the
// test suites and by `synlink synth` to produce a runnable demo dataset.
//
// Each linked source synset gets 1..max_members words with N(0,1) vectors.
// Its target synset has the same number of words whose vectors are
// G * source_word + noise, so without noise the target synset mean is
// exactly G times the source synset mean.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synlink/embedding_io.hpp"
#include "synlink/lexicon.hpp"

namespace synlink {

struct SyntheticOptions {
  std::size_t linked_synsets = 300;
  std::size_t source_dimension = 50;
  std::size_t target_dimension = 50;
  double noise_sigma = 0.0;
  std::size_t max_members = 3;
  std::size_t unlinked_sources = 0;  // source synsets with no gold link
  std::size_t extra_targets = 0;     // distractor target synsets
  std::size_t hypernymy_links = 0;   // non-DIRECT rows mixed into the link list
  std::size_t oov_sources = 0;       // linked sources whose words are missing from the table
  std::uint64_t seed = 1;
};

struct SyntheticWorld {
  WordEmbeddingTable source_table;
  WordEmbeddingTable target_table;
  Lexicon source;
  Lexicon target;
  std::vector<LinkRecord> links;
  Eigen::MatrixXd ground_truth;  // target_dim x source_dim
};

namespace detail {

inline std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu", prefix, i);
  return buf;
}

// Roughly the class mix of a real wordnet link set.
inline Pos draw_pos(std::mt19937_64& rng) {
  std::discrete_distribution<int> dist({69.0, 19.0, 10.0, 2.0});
  return kAllPos[static_cast<std::size_t>(dist(rng))];
}

}  // namespace detail

inline SyntheticWorld make_synthetic_world(const SyntheticOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> member_count(1, std::max<std::size_t>(1, opt.max_members));

  const auto ds = static_cast<Eigen::Index>(opt.source_dimension);
  const auto dt = static_cast<Eigen::Index>(opt.target_dimension);
  Eigen::MatrixXd g(dt, ds);
  const double g_scale = 1.0 / std::sqrt(static_cast<double>(ds));
  for (Eigen::Index c = 0; c < ds; ++c) {
    for (Eigen::Index r = 0; r < dt; ++r) g(r, c) = unit(rng) * g_scale;
  }

  SyntheticWorld world{WordEmbeddingTable("src", opt.source_dimension),
                       WordEmbeddingTable("tgt", opt.target_dimension),
                       Lexicon("src"),
                       Lexicon("tgt"),
                       {},
                       g};

  std::vector<float> sv(opt.source_dimension);
  std::vector<float> tv(opt.target_dimension);
  auto add_source_word = [&](const std::string& word, Eigen::VectorXd& out) {
    for (auto& x : sv) x = static_cast<float>(unit(rng));
    world.source_table.insert(word, sv);
    out = Eigen::Map<const Eigen::VectorXf>(sv.data(), ds).cast<double>();
  };
  auto add_target_word = [&](const std::string& word, const Eigen::VectorXd& image) {
    for (Eigen::Index i = 0; i < dt; ++i) {
      tv[static_cast<std::size_t>(i)] = static_cast<float>(image[i] + opt.noise_sigma * unit(rng));
    }
    world.target_table.insert(word, tv);
  };

  const std::size_t total_sources = opt.linked_synsets + opt.unlinked_sources;
  std::size_t target_counter = 0;
  for (std::size_t i = 0; i < total_sources; ++i) {
    const bool linked = i < opt.linked_synsets;
    const bool oov = linked && i >= opt.linked_synsets - std::min(opt.oov_sources, opt.linked_synsets);
    const Pos pos = detail::draw_pos(rng);
    const std::size_t m = member_count(rng);
    Synset source{detail::padded_id("src", i), "src", pos, {}, "source gloss " + std::to_string(i)};
    Synset target{detail::padded_id("tgt", target_counter), "tgt", pos, {}, "target gloss " + std::to_string(target_counter)};
    for (std::size_t j = 0; j < m; ++j) {
      const std::string sw = "s" + std::to_string(i) + "w" + std::to_string(j);
      const std::string tw = "t" + std::to_string(target_counter) + "w" + std::to_string(j);
      Eigen::VectorXd x;
      add_source_word(sw, x);
      if (oov) {
        source.members.push_back("oov" + std::to_string(i) + "w" + std::to_string(j));
      } else {
        source.members.push_back(sw);
      }
      if (linked) {
        add_target_word(tw, g * x);
        target.members.push_back(tw);
      }
    }
    world.source.insert(std::move(source));
    if (linked) {
      world.links.push_back({detail::padded_id("src", i), target.id, LinkType::parse("DIRECT")});
      world.target.insert(std::move(target));
      ++target_counter;
    }
  }

  for (std::size_t e = 0; e < opt.extra_targets; ++e, ++target_counter) {
    const Pos pos = detail::draw_pos(rng);
    Synset target{detail::padded_id("tgt", target_counter), "tgt", pos, {}, std::nullopt};
    const std::string tw = "t" + std::to_string(target_counter) + "w0";
    Eigen::VectorXd x(ds);
    for (Eigen::Index i = 0; i < ds; ++i) x[i] = unit(rng);
    add_target_word(tw, g * x);
    target.members.push_back(tw);
    world.target.insert(std::move(target));
  }

  if (opt.hypernymy_links > 0 && opt.linked_synsets > 0 && target_counter > 0) {
    std::uniform_int_distribution<std::size_t> src_pick(0, opt.linked_synsets - 1);
    std::uniform_int_distribution<std::size_t> tgt_pick(0, target_counter - 1);
    for (std::size_t h = 0; h < opt.hypernymy_links; ++h) {
      world.links.push_back({detail::padded_id("src", src_pick(rng)),
                             detail::padded_id("tgt", tgt_pick(rng)), LinkType::parse("HYPERNYMY")});
    }
  }
  return world;
}

inline void write_synsets_tsv(std::ostream& out, const Lexicon& lexicon) {
  for (const auto& [id, s] : lexicon) {
    out << id << '\t' << pos_code(s.pos) << '\t';
    for (std::size_t i = 0; i < s.members.size(); ++i) {
      if (i > 0) out << '|';
      out << s.members[i];
    }
    if (s.gloss) out << '\t' << *s.gloss;
    out << '\n';
  }
}

inline void write_links_tsv(std::ostream& out, const std::vector<LinkRecord>& links) {
  for (const auto& l : links) out << l.source_id << '\t' << l.target_id << '\t' << l.type.raw << '\n';
}

struct SyntheticFiles {
  std::filesystem::path source_embeddings;
  std::filesystem::path target_embeddings;
  std::filesystem::path source_synsets;
  std::filesystem::path target_synsets;
  std::filesystem::path links;
};

inline SyntheticFiles write_synthetic_world(const std::filesystem::path& dir,
                                            const SyntheticWorld& world) {
  std::filesystem::create_directories(dir);
  SyntheticFiles files{dir / "src.vec", dir / "tgt.vec", dir / "src.synsets.tsv",
                       dir / "tgt.synsets.tsv", dir / "links.tsv"};
  write_word2vec_text(files.source_embeddings, world.source_table);
  write_word2vec_text(files.target_embeddings, world.target_table);
  {
    std::ofstream out(files.source_synsets, std::ios::binary);
    write_synsets_tsv(out, world.source);
  }
  {
    std::ofstream out(files.target_synsets, std::ios::binary);
    write_synsets_tsv(out, world.target);
  }
  {
    std::ofstream out(files.links, std::ios::binary);
    write_links_tsv(out, world.links);
  }
  return files;
}

}  // namespace synlink
